//! Dimension constants, Stirling-type sandwiches, and the error certificate
//! `Δ″ (C δ)^(c/δ) ‖f‖_h` for Gaussian interpolation.
//!
//! All large quantities are carried as [`LogScalar`]s. `C` contains the
//! factor `exp(8 n gamma_n)`, so for `n >= 3` it is far outside the `f64`
//! range and `1/C` underflows; such certificates report `delta0 == 0.0` (with
//! the exact value kept in `ln_delta0`) and refuse every real spacing.

use std::f64::consts::{E, LN_2, PI};

use serde::Serialize;

use crate::error::{domain, invalid, Error, Result};
use crate::moments::ln_unit_ball_volume;
use crate::numerics::{log_factorial, LogScalar};

/// `sqrt(3) / e`.
pub const RHO: f64 = 0.637_185_883_168_983_96;
/// `1 / e`.
pub const RHO1: f64 = 0.367_879_441_171_442_32;
/// `3^(1/6) / e`.
pub const RHO2: f64 = 0.441_800_015_952_281_36;

/// Largest dimension whose `gamma_n` is tabulated exactly.
pub const MAX_DIMENSION: u32 = 20;

/// `gamma_1 = 2`, `gamma_n = 2 n (1 + gamma_{n-1})`.
pub fn gamma_n(n: u32) -> Result<u128> {
    if !(1..=MAX_DIMENSION).contains(&n) {
        return Err(Error::Range(format!(
            "gamma_n is tabulated for 1 <= n <= {MAX_DIMENSION}, got {n}"
        )));
    }
    let mut g: u128 = 2;
    for m in 2..=n as u128 {
        g = 2 * m * (1 + g);
    }
    Ok(g)
}

pub fn gamma_n_f64(n: u32) -> Result<f64> {
    Ok(gamma_n(n)? as f64)
}

/// `rho_3 = sqrt(2 rho beta) / rho_1`.
pub fn rho3(beta: f64) -> f64 {
    (2.0 * RHO * beta).sqrt() / RHO1
}

/// Factorial of `k` next to its Stirling-type bounds, all in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StirlingReport {
    pub k: u64,
    /// `sqrt(2 pi) rho_1^k k^k`
    pub lower: LogScalar,
    pub exact: LogScalar,
    /// `sqrt(2 pi) rho_2^k k^k`
    pub upper_l3: LogScalar,
    /// `sqrt(2 pi) rho^k k^(k-1)`
    pub upper_l4: LogScalar,
}

impl StirlingReport {
    pub fn lower_holds(&self) -> bool {
        self.lower <= self.exact
    }

    pub fn upper_l3_holds(&self) -> bool {
        self.exact <= self.upper_l3
    }

    pub fn upper_l4_holds(&self) -> bool {
        self.exact <= self.upper_l4
    }

    pub fn all_hold(&self) -> bool {
        self.lower_holds() && self.upper_l3_holds() && self.upper_l4_holds()
    }
}

pub fn stirling_report(k: u64) -> Result<StirlingReport> {
    if k == 0 {
        return Err(Error::Range("Stirling bounds are stated for k >= 1".into()));
    }
    let kf = k as f64;
    let half_ln_2pi = 0.5 * (2.0 * PI).ln();
    let k_ln_k = kf * kf.ln();
    Ok(StirlingReport {
        k,
        lower: LogScalar::from_ln(half_ln_2pi + kf * RHO1.ln() + k_ln_k),
        exact: LogScalar::from_ln(log_factorial(k)),
        upper_l3: LogScalar::from_ln(half_ln_2pi + kf * RHO2.ln() + k_ln_k),
        upper_l4: LogScalar::from_ln(half_ln_2pi + kf * RHO.ln() + (kf - 1.0) * kf.ln()),
    })
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Spacing threshold `delta_n` (piecewise in the parity of `n`).
pub fn delta_n(n: u32, b0: f64) -> Result<f64> {
    check_positive("b0", b0)?;
    let g = gamma_n_f64(n)?;
    let divisor = match n {
        1 | 2 => 1.0,
        n if n % 2 == 1 => (n - 1) as f64,
        n => (n - 2) as f64,
    };
    Ok(b0 / (2.0 * g * divisor))
}

/// Prefactor `Δ″`.
pub fn delta_double_prime(n: u32) -> Result<LogScalar> {
    let nf = n as f64;
    let ln_n_alpha = nf.ln() + ln_unit_ball_volume(n)?;
    let ln = if n % 2 == 1 {
        0.25 * (nf - 1.0) * PI.ln()
            + 0.5 * ln_n_alpha
            + 0.5 * (2.0 + 1.0 / E).ln()
            + 0.25 * nf * LN_2
            + 0.25 * (nf - 1.0) * RHO.ln()
    } else {
        0.25 * (nf - 1.0) * PI.ln()
            + 0.5 * ln_n_alpha
            + 0.25 * (nf + 1.0) * LN_2
            + 0.25 * (nf - 2.0) * RHO.ln()
    };
    Ok(LogScalar::from_ln(ln))
}

/// `B′ = rho_3 sqrt(n) e^(2 n gamma_n)`.
pub fn b_prime(n: u32, beta: f64) -> Result<LogScalar> {
    check_positive("beta", beta)?;
    let g = gamma_n_f64(n)?;
    let nf = n as f64;
    Ok(LogScalar::from_ln(rho3(beta).ln() + 0.5 * nf.ln() + 2.0 * nf * g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Constants valid in every dimension.
    General,
    /// Sharper one-dimensional constants (`n = 1` only).
    N1Improved,
    /// Fill-distance form derived from one of the other two.
    FillDistance,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::General => "general",
            Variant::N1Improved => "n1-improved",
            Variant::FillDistance => "fill-distance",
        }
    }
}

/// `B″`: `3^(3/4) B′` for the general constants, `sqrt(2) B′` for the
/// improved one-dimensional constants.
pub fn b_double_prime(n: u32, beta: f64, variant: Variant) -> Result<LogScalar> {
    let bp = b_prime(n, beta)?;
    let factor = match variant {
        Variant::General => 0.75 * 3f64.ln(),
        Variant::N1Improved => 0.5 * LN_2,
        Variant::FillDistance => {
            return Err(invalid("B'' is defined for the general and n1-improved constants"))
        }
    };
    Ok(bp * LogScalar::from_ln(factor))
}

/// Constants of one error certificate.
///
/// For [`Variant::FillDistance`] the spacing parameter is the fill distance
/// `d`, `c_base`/`c_exp`/`delta0` hold `C′ = 2C`, `c′ = c/2`, `d0 = delta0/2`,
/// and `derived_from` names the certificate they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub n: u32,
    pub beta: f64,
    pub b0: f64,
    pub gamma_n: u128,
    /// Admissible spacing threshold; `0.0` when `exp(ln_delta0)` underflows.
    pub delta0: f64,
    pub ln_delta0: f64,
    pub c_exp: f64,
    pub c_base: LogScalar,
    pub delta_pp: LogScalar,
    pub variant: Variant,
    pub derived_from: Option<Variant>,
}

impl Certificate {
    /// True when the threshold is below the smallest positive `f64`.
    pub fn delta0_underflowed(&self) -> bool {
        self.delta0 == 0.0
    }

    pub fn ln_c_base(&self) -> f64 {
        self.c_base.ln_abs()
    }
}

pub fn certificate(n: u32, beta: f64, b0: f64, variant: Variant) -> Result<Certificate> {
    check_positive("beta", beta)?;
    check_positive("b0", b0)?;
    let gamma = gamma_n(n)?;
    let g = gamma as f64;
    let nf = n as f64;
    let (ln_c, c_exp) = match variant {
        Variant::General => {
            let ln_base = 0.75 * 3f64.ln() + 1.0 + 0.5 * (2.0 * RHO * beta).ln() + 0.5 * nf.ln() + 2.0 * nf * g;
            (4.0 * ln_base + 3.0 * b0.ln() + g.ln(), b0 / (8.0 * g))
        }
        Variant::N1Improved => {
            if n != 1 {
                return Err(invalid(format!("the n1-improved constants require n = 1, got n = {n}")));
            }
            let ln_base = 0.5 * LN_2 + 1.0 + 0.5 * (2.0 * RHO * beta).ln() + 0.5 * nf.ln() + 2.0 * nf * g;
            (2.0 * ln_base + g.ln() + b0.ln(), b0 / (4.0 * g))
        }
        Variant::FillDistance => {
            return Err(invalid(
                "fill-distance certificates are derived with corollary_certificate",
            ))
        }
    };
    // Both variants use the same second branch (b0 / (2 gamma_n) for n = 1).
    let ln_delta0 = (-ln_c).min(delta_n(n, b0)?.ln());
    Ok(Certificate {
        n,
        beta,
        b0,
        gamma_n: gamma,
        delta0: ln_delta0.exp(),
        ln_delta0,
        c_exp,
        c_base: LogScalar::from_ln(ln_c),
        delta_pp: delta_double_prime(n)?,
        variant,
        derived_from: None,
    })
}

/// Fill-distance form: `C′ = 2C`, `c′ = c/2`, `d0 = delta0/2`, `Δ″` unchanged.
pub fn corollary_certificate(cert: &Certificate) -> Result<Certificate> {
    if cert.variant == Variant::FillDistance {
        return Err(invalid("certificate is already in fill-distance form"));
    }
    let ln_delta0 = cert.ln_delta0 - LN_2;
    Ok(Certificate {
        delta0: cert.delta0 / 2.0,
        ln_delta0,
        c_exp: cert.c_exp / 2.0,
        c_base: cert.c_base * LogScalar::from_ln(LN_2),
        variant: Variant::FillDistance,
        derived_from: Some(cert.variant),
        ..cert.clone()
    })
}

fn check_norm(norm_f: f64) -> Result<()> {
    if norm_f >= 0.0 && norm_f.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("norm must be finite and non-negative, got {norm_f}")))
    }
}

/// `Δ″ (C δ)^(c/δ) ‖f‖_h` for `0 < δ <= delta0`.
pub fn bound_value(cert: &Certificate, delta: f64, norm_f: f64) -> Result<LogScalar> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(domain(format!("spacing must be positive and finite, got {delta}")));
    }
    check_norm(norm_f)?;
    if delta > cert.delta0 {
        return Err(Error::OutOfCertificate {
            delta,
            delta0: cert.delta0,
        });
    }
    Ok(evaluate(cert, delta.ln(), norm_f))
}

/// [`bound_value`] with the spacing given as `ln δ`, for thresholds below the
/// `f64` range.
pub fn bound_value_ln(cert: &Certificate, ln_delta: f64, norm_f: f64) -> Result<LogScalar> {
    if ln_delta.is_nan() || ln_delta == f64::INFINITY {
        return Err(domain("ln delta must be finite or -inf"));
    }
    check_norm(norm_f)?;
    if ln_delta > cert.ln_delta0 {
        return Err(Error::OutOfCertificate {
            delta: ln_delta.exp(),
            delta0: cert.delta0,
        });
    }
    Ok(evaluate(cert, ln_delta, norm_f))
}

fn evaluate(cert: &Certificate, ln_delta: f64, norm_f: f64) -> LogScalar {
    if norm_f == 0.0 || ln_delta == f64::NEG_INFINITY {
        return LogScalar::ZERO;
    }
    // δ <= delta0 <= 1/C, so C δ <= 1; clamp rounding noise at the threshold.
    let ln_c_delta = (cert.ln_c_base() + ln_delta).min(0.0);
    let exponent_term = if ln_c_delta == 0.0 {
        0.0
    } else {
        (cert.c_exp.ln() - ln_delta).exp() * ln_c_delta
    };
    LogScalar::from_ln(cert.delta_pp.ln_abs() + exponent_term + norm_f.ln())
}
