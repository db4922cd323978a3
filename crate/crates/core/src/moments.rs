//! Moments of the spectral measure of the Gaussian kernel.
//!
//! For `h(x) = exp(-beta |x|^2)` on `R^n` the measure has density
//! `(pi/beta)^(n/2) exp(-|xi|^2 / (4 beta))`. Its radial moments have a closed
//! form through `Γ((k+n)/2)`; this module evaluates them in the log domain,
//! the polynomial-type upper bounds used by the error certificate, the
//! coefficients `c_k`, and an independent quadrature route for cross-checks.

use std::f64::consts::{E, LN_2, PI};

use crate::constants::{gamma_n_f64, RHO};
use crate::error::{domain, invalid, Error, Result};
use crate::numerics::{log_factorial, log_gamma, LogScalar};
use crate::quadrature::{self, Tolerance};

/// Volume of the unit ball in `R^n`, `pi^(n/2) / Γ(n/2 + 1)`.
pub fn unit_ball_volume(n: u32) -> Result<f64> {
    Ok(ln_unit_ball_volume(n)?.exp())
}

pub fn ln_unit_ball_volume(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    let half = n as f64 / 2.0;
    Ok(half * PI.ln() - log_gamma(half + 1.0)?)
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("shape parameter beta must be positive, got {beta}")))
    }
}

/// `∫ |xi|^k dmu(xi)` for the Gaussian spectral measure. Any `k >= 0` is
/// accepted; the certificate only uses even orders.
pub fn exact_moment(n: u32, k: u64, beta: f64) -> Result<LogScalar> {
    check_beta(beta)?;
    let nf = n as f64;
    let m = k as f64 + nf;
    let ln = 0.5 * nf * (PI / beta).ln()
        + nf.ln()
        + ln_unit_ball_volume(n)?
        + m * (2.0 * beta.sqrt()).ln()
        + log_gamma(0.5 * m)?
        - LN_2;
    Ok(LogScalar::from_ln(ln))
}

/// Upper bound on the `k`-th moment for positive even `k`, with separate
/// branches for odd and even dimension.
pub fn lemma5_bound(n: u32, k: u64, beta: f64) -> Result<LogScalar> {
    check_beta(beta)?;
    if n == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if k == 0 || k % 2 == 1 {
        return Err(invalid(format!("moment order must be a positive even integer, got {k}")));
    }
    let nf = n as f64;
    let kf = k as f64;
    let common = 0.5 * (nf + 1.0) * PI.ln() + nf.ln() + ln_unit_ball_volume(n)? + 0.5 * kf * beta.ln();
    let ln = if n % 2 == 1 {
        common
            + 0.5 * (kf + nf + 2.0) * LN_2
            + 0.5 * (kf + nf - 1.0) * RHO.ln()
            + 0.5 * (kf + nf - 3.0) * (kf + nf - 1.0).ln()
            + (2.0 + 1.0 / E).ln()
    } else {
        common
            + 0.5 * (kf + nf + 3.0) * LN_2
            + 0.5 * (kf + nf - 2.0) * RHO.ln()
            + 0.5 * (kf + nf - 4.0) * (kf + nf - 2.0).ln()
    };
    Ok(LogScalar::from_ln(ln))
}

/// `c_k = { ∫ |xi|^(2k) / (k!)^2 dmu }^(1/2)`.
pub fn c_k_coefficient(n: u32, k: u64, beta: f64) -> Result<LogScalar> {
    if k == 0 {
        return Err(invalid("c_k is defined for k >= 1"));
    }
    let moment = exact_moment(n, 2 * k, beta)?;
    Ok(LogScalar::from_ln(0.5 * moment.ln_abs() - log_factorial(k)))
}

/// Exact moment next to its upper bound and, when the value fits in an
/// `f64`, the quadrature estimate.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub n: u32,
    pub k: u64,
    pub beta: f64,
    pub exact: LogScalar,
    pub bound: LogScalar,
    pub quadrature: Option<f64>,
}

impl MomentReport {
    pub fn bound_holds(&self) -> bool {
        self.exact <= self.bound
    }

    /// Relative gap between the quadrature and the closed form.
    pub fn oracle_rel_error(&self) -> Option<f64> {
        self.quadrature
            .map(|q| ((q - self.exact.to_real()) / q).abs())
    }
}

/// Relative tolerance used for the quadrature column of [`moment_report`].
pub const REPORT_QUADRATURE_TOL: f64 = 1e-11;

pub fn moment_report(n: u32, k: u64, beta: f64) -> Result<MomentReport> {
    let exact = exact_moment(n, k, beta)?;
    let bound = lemma5_bound(n, k, beta)?;
    let quadrature = match quadrature_moment(n, k, beta, REPORT_QUADRATURE_TOL) {
        Ok(v) => Some(v),
        Err(Error::Overflow(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(MomentReport {
        n,
        k,
        beta,
        exact,
        bound,
        quadrature,
    })
}

/// Surface measure of the unit sphere, `n * alpha_n`, from the dimension
/// recursion `alpha_n = alpha_{n-2} * 2 pi / n`. Kept independent of
/// `log_gamma` so the quadrature route shares no code with the closed form.
fn sphere_area_by_recursion(n: u32) -> f64 {
    let even = n.is_multiple_of(2);
    let mut alpha = if even { 1.0 } else { 2.0 };
    let mut d = if even { 0 } else { 1 };
    while d < n {
        d += 2;
        alpha *= 2.0 * PI / d as f64;
    }
    n as f64 * alpha
}

/// Radial quadrature of `(pi/beta)^(n/2) * n alpha_n * ∫_0^∞ r^(k+n-1) e^(-r²/(4beta)) dr`.
///
/// The truncation radius starts past the integrand's peak and doubles until
/// the tail term falls below `rel_tol` times the running estimate.
pub fn quadrature_moment(n: u32, k: u64, beta: f64, rel_tol: f64) -> Result<f64> {
    check_beta(beta)?;
    if n == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(rel_tol > 0.0) {
        return Err(invalid("rel_tol must be positive"));
    }
    let power = (k + n as u64 - 1) as f64;
    let scale = 4.0 * beta;
    // Peak of r^p e^{-r²/scale} at r* = sqrt(p scale / 2); a Laplace-type
    // estimate of the integral guards against overflow before integrating.
    let r_peak = (0.5 * power * scale).sqrt();
    let width = (0.25 * scale).sqrt();
    let ln_peak = if power > 0.0 { power * r_peak.ln() - r_peak * r_peak / scale } else { 0.0 };
    let ln_prefactor = 0.5 * n as f64 * (PI / beta).ln() + sphere_area_by_recursion(n).ln();
    let ln_estimate = ln_prefactor + ln_peak + (2.5 * width).ln();
    if ln_estimate.abs() > 650.0 {
        return Err(Error::Overflow(format!(
            "moment (n={n}, k={k}, beta={beta}) has ln-magnitude ~{ln_estimate:.1}"
        )));
    }

    let integrand = |r: f64| {
        if r <= 0.0 {
            if power == 0.0 { 1.0 } else { 0.0 }
        } else {
            (power * r.ln() - r * r / scale).exp()
        }
    };
    let tol = Tolerance::relative(rel_tol * 0.25);
    let mut radius = r_peak + 12.0 * width;
    let mut value = 0.0;
    for _ in 0..64 {
        // Split at the peak so both sides are resolved.
        let split = r_peak.min(radius);
        let left = if split > 0.0 {
            quadrature::integrate(integrand, 0.0, split, tol)?.value
        } else {
            0.0
        };
        let right = quadrature::integrate(integrand, split, radius, tol)?.value;
        value = left + right;
        let tail = integrand(radius) * radius;
        if tail < 0.25 * rel_tol * value {
            return Ok(ln_prefactor.exp() * value);
        }
        radius *= 2.0;
    }
    Err(Error::Convergence(format!(
        "truncation radius did not settle (last estimate {value:e})"
    )))
}

/// Upper bound on the interpolation error functional before the choice of
/// `k`: `c_k * (sqrt(n) gamma_n k delta)^k * e^(2 n gamma_n k)`, evaluated at
/// `k = floor(b0 / (2 gamma_n delta))` (at least 1).
pub fn i_chain_bound(n: u32, beta: f64, b0: f64, delta: f64) -> Result<LogScalar> {
    let gamma = gamma_n_f64(n)?;
    let k = chain_order(gamma, b0, delta)?;
    i_chain_bound_at(n, beta, delta, k)
}

/// The same product at an explicit order `k`.
pub fn i_chain_bound_at(n: u32, beta: f64, delta: f64, k: u64) -> Result<LogScalar> {
    if !(delta > 0.0) {
        return Err(domain("delta must be positive"));
    }
    let gamma = gamma_n_f64(n)?;
    let kf = k as f64;
    let ck = c_k_coefficient(n, k, beta)?;
    let ln = ck.ln_abs()
        + kf * ((n as f64).sqrt() * gamma * kf * delta).ln()
        + 2.0 * n as f64 * gamma * kf;
    Ok(LogScalar::from_ln(ln))
}

pub(crate) fn chain_order(gamma: f64, b0: f64, delta: f64) -> Result<u64> {
    if !(delta > 0.0) || !(b0 > 0.0) {
        return Err(domain("b0 and delta must be positive"));
    }
    let k = (b0 / (2.0 * gamma * delta)).floor();
    if !(k < u64::MAX as f64) {
        return Err(Error::Range(format!("order b0/(2 gamma delta) = {k:e} is too large")));
    }
    Ok((k as u64).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use crate::constants;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn unit_ball_volumes() {
        assert!(rel(unit_ball_volume(1).unwrap(), 2.0) < 1e-14);
        assert!(rel(unit_ball_volume(2).unwrap(), PI) < 1e-14);
        assert!(rel(unit_ball_volume(3).unwrap(), 4.0 * PI / 3.0) < 1e-14);
        assert!(unit_ball_volume(0).is_err());
        for n in 1..=12 {
            let via_recursion = sphere_area_by_recursion(n) / n as f64;
            assert!(rel(unit_ball_volume(n).unwrap(), via_recursion) < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn unit_ball_volume_monte_carlo() {
        use crate::rng::{stream, uniform};
        let mut r = stream(2024);
        let trials = 400_000;
        let mut inside = 0usize;
        for _ in 0..trials {
            let p: [f64; 3] = [uniform(&mut r, -1.0, 1.0), uniform(&mut r, -1.0, 1.0), uniform(&mut r, -1.0, 1.0)];
            if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                inside += 1;
            }
        }
        let mc = 8.0 * inside as f64 / trials as f64;
        // 4 sigma of the binomial estimate is about 0.01.
        assert!((mc - unit_ball_volume(3).unwrap()).abs() < 0.012, "mc = {mc}");
    }

    #[test]
    fn exact_moment_examples() {
        assert!(rel(exact_moment(1, 2, 1.0).unwrap().to_real(), 4.0 * PI) < 1e-14);
        assert!(rel(exact_moment(2, 2, 1.0).unwrap().to_real(), 16.0 * PI * PI) < 1e-14);
        assert!(rel(exact_moment(1, 0, 1.0).unwrap().to_real(), 2.0 * PI) < 1e-14);
        assert!(rel(exact_moment(2, 0, 1.0).unwrap().to_real(), 4.0 * PI * PI) < 1e-14);
        assert!(rel(exact_moment(1, 4, 1.0).unwrap().to_real(), 24.0 * PI) < 1e-14);
        assert!(exact_moment(1, 2, 0.0).is_err());
        assert!(exact_moment(1, 2, -1.0).is_err());
    }

    #[test]
    fn exact_moment_matches_direct_one_dimensional_quadrature() {
        // √π ∫_R ξ² e^{-ξ²/4} dξ
        let direct = integrate(|x| x * x * (-x * x / 4.0).exp(), -60.0, 60.0, Tolerance::relative(1e-13))
            .unwrap()
            .value
            * PI.sqrt();
        assert!(rel(direct, 4.0 * PI) < 1e-12);
    }

    #[test]
    fn exact_moment_matches_product_chain_for_odd_n() {
        // Odd n: π^{n/2} n α_n 2^{n-1+k} β^{k/2} (k+n-2)/2 · ... · 1/2 · √π
        for n in [1u32, 3, 5] {
            for k in [2u64, 4, 6, 8] {
                for beta in [0.5f64, 2.0] {
                    let mut chain = PI.sqrt();
                    let mut t = (k + n as u64 - 2) as f64 / 2.0;
                    while t > 0.0 {
                        chain *= t;
                        t -= 1.0;
                    }
                    let nf = n as f64;
                    let val = PI.powf(nf / 2.0) * nf * unit_ball_volume(n).unwrap()
                        * 2f64.powf(nf - 1.0 + k as f64)
                        * beta.powf(k as f64 / 2.0)
                        * chain;
                    assert!(rel(exact_moment(n, k, beta).unwrap().to_real(), val) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn lemma5_bound_examples() {
        // 60-digit references.
        assert!(rel(lemma5_bound(1, 2, 1.0).unwrap().to_real(), 53.626_640_357_710_8) < 1e-13);
        assert!(rel(lemma5_bound(2, 2, 1.0).unwrap().to_real(), 252.217_843_263_284_45) < 1e-13);
        let r = moment_report(3, 2, 2.0).unwrap();
        assert!(r.bound_holds());
        assert_eq!(r.bound.sign(), crate::numerics::Sign::Positive);
    }

    #[test]
    fn lemma5_bound_rejects_bad_orders() {
        assert!(lemma5_bound(1, 3, 1.0).is_err());
        assert!(lemma5_bound(2, 0, 1.0).is_err());
        assert!(lemma5_bound(2, 2, 0.0).is_err());
    }

    #[test]
    fn even_dimension_bound_inherits_factorial_failure() {
        // For even n with k + n = 8 the bound reduces to k! <= sqrt(2 pi) rho^k k^(k-1)
        // at k = 3, where 3! exceeds the right side by a factor 1.02806.
        for (n, k) in [(2u32, 6u64), (4, 4), (6, 2)] {
            let exact = exact_moment(n, k, 1.0).unwrap();
            let bound = lemma5_bound(n, k, 1.0).unwrap();
            let ratio = (exact.ln_abs() - bound.ln_abs()).exp();
            assert!((ratio - 1.028_064_517_918_789_3).abs() < 1e-12, "n={n} k={k} ratio={ratio}");
        }
    }

    #[test]
    fn c_k_examples() {
        assert!(rel(c_k_coefficient(1, 1, 1.0).unwrap().to_real(), (4.0 * PI).sqrt()) < 1e-14);
        assert!(rel(c_k_coefficient(1, 2, 1.0).unwrap().to_real(), (24.0 * PI).sqrt() / 2.0) < 1e-14);
        assert!(c_k_coefficient(1, 0, 1.0).is_err());
    }

    #[test]
    fn quadrature_examples() {
        assert!(rel(quadrature_moment(1, 2, 1.0, 1e-10).unwrap(), 4.0 * PI) < 1e-10);
        assert!(rel(quadrature_moment(2, 0, 1.0, 1e-10).unwrap(), 4.0 * PI * PI) < 1e-10);
        let odd = quadrature_moment(1, 3, 1.0, 1e-10).unwrap();
        // √π · 2 ∫_0^∞ r³ e^{-r²/4} dr = √π · 2 · 8
        assert!(rel(odd, 16.0 * PI.sqrt()) < 1e-10);
        assert!(rel(odd, exact_moment(1, 3, 1.0).unwrap().to_real()) < 1e-10);
    }

    #[test]
    fn quadrature_overflow_guard() {
        assert!(matches!(quadrature_moment(1, 400, 4.0, 1e-10), Err(Error::Overflow(_))));
    }

    #[test]
    fn u_integral_bound_constant() {
        // ∫_0^∞ u^{-1/2} e^{-u} du = √π ≤ 2 + 1/e; substitute u = t².
        let v = integrate(|t| 2.0 * (-t * t).exp(), 0.0, 40.0, Tolerance::relative(1e-13)).unwrap().value;
        assert!(rel(v, PI.sqrt()) < 1e-12);
        assert!(v <= 2.0 + 1.0 / E);
    }

    #[test]
    fn i_chain_decays_along_halving_deltas() {
        let cert = constants::certificate(1, 1.0, 1.0, constants::Variant::General).unwrap();
        let mut prev = None;
        for j in 0..=20 {
            let delta = cert.delta0 * 0.5f64.powi(j);
            let v = i_chain_bound(1, 1.0, 1.0, delta).unwrap();
            if let Some(p) = prev {
                assert!(v < p, "j = {j}");
            }
            prev = Some(v);
        }
    }

    #[test]
    fn i_chain_sits_below_certificate_bound() {
        let cert = constants::certificate(1, 1.0, 1.0, constants::Variant::General).unwrap();
        let gamma: f64 = 2.0;
        for j in 0..10 {
            let delta = cert.delta0 * 0.5f64.powi(j);
            let k = (1.0 / (2.0 * gamma * delta)).ceil() as u64;
            let chain = i_chain_bound_at(1, 1.0, delta, k).unwrap();
            let bound = constants::bound_value(&cert, delta, 1.0).unwrap();
            assert!(chain <= bound, "j = {j}");
        }
    }
}
