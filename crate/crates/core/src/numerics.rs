//! Extended-range signed arithmetic and the special functions built on it.
//!
//! The constants of the Gaussian error certificate contain factors such as
//! `exp(2 n gamma_n)` that overflow `f64` already for `n = 3`. A
//! [`LogScalar`] stores a value as a sign plus the natural logarithm of its
//! magnitude, so products, powers and comparisons stay exact up to the
//! rounding of the logarithm itself.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{domain, invalid, Result};

/// Opposite-sign sums whose log-magnitudes differ by less than this collapse
/// to zero.
pub const CANCELLATION_THRESHOLD: f64 = 1e-15;

/// Arguments below this use the direct summation of `ln i` in
/// [`log_factorial`]; larger arguments go through [`log_gamma`].
pub const LOG_FACTORIAL_SUM_LIMIT: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    fn flip(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }

    fn times(self, other: Sign) -> Sign {
        match (self, other) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        }
    }
}

/// A real number stored as `sign * exp(ln_abs)`.
///
/// Zero is canonical: `sign == Zero` and `ln_abs == -inf`. A positive
/// log-magnitude of `+inf` is allowed and compares above every finite value.
#[derive(Clone, Copy)]
pub struct LogScalar {
    sign: Sign,
    ln_abs: f64,
}

impl LogScalar {
    pub const ZERO: LogScalar = LogScalar {
        sign: Sign::Zero,
        ln_abs: f64::NEG_INFINITY,
    };

    pub const ONE: LogScalar = LogScalar {
        sign: Sign::Positive,
        ln_abs: 0.0,
    };

    /// Builds a value from its sign and log-magnitude. A log-magnitude of
    /// `-inf` yields zero regardless of `sign`.
    pub fn from_parts(sign: Sign, ln_abs: f64) -> Result<Self> {
        if ln_abs.is_nan() {
            return Err(invalid("log-magnitude is NaN"));
        }
        Ok(Self::normalized(sign, ln_abs))
    }

    /// `exp(ln_abs)` as a positive scalar.
    pub fn from_ln(ln_abs: f64) -> Self {
        debug_assert!(!ln_abs.is_nan());
        Self::normalized(Sign::Positive, ln_abs)
    }

    pub fn from_real(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(invalid(format!("cannot represent non-finite value {x}")));
        }
        let sign = if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        };
        Ok(Self::normalized(sign, x.abs().ln()))
    }

    fn normalized(sign: Sign, ln_abs: f64) -> Self {
        if sign == Sign::Zero || ln_abs == f64::NEG_INFINITY || ln_abs.is_nan() {
            Self::ZERO
        } else {
            // `+ 0.0` folds a negative zero into positive zero.
            LogScalar {
                sign,
                ln_abs: ln_abs + 0.0,
            }
        }
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        self.ln_abs
    }

    /// Base-10 log of the magnitude; `-inf` for zero.
    pub fn log10_abs(&self) -> f64 {
        self.ln_abs / std::f64::consts::LN_10
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    /// Materializes the value; overflows to `±inf` or underflows to `0`
    /// outside the `f64` range.
    pub fn to_real(&self) -> f64 {
        match self.sign {
            Sign::Zero => 0.0,
            Sign::Positive => self.ln_abs.exp(),
            Sign::Negative => -self.ln_abs.exp(),
        }
    }

    pub fn abs(&self) -> Self {
        match self.sign {
            Sign::Negative => LogScalar {
                sign: Sign::Positive,
                ln_abs: self.ln_abs,
            },
            _ => *self,
        }
    }

    /// `self^p`. Negative bases need an integer exponent; zero needs `p >= 0`.
    pub fn pow(&self, p: f64) -> Result<Self> {
        if p.is_nan() {
            return Err(invalid("exponent is NaN"));
        }
        match self.sign {
            Sign::Zero => {
                if p > 0.0 {
                    Ok(Self::ZERO)
                } else if p == 0.0 {
                    Ok(Self::ONE)
                } else {
                    Err(domain("zero raised to a negative power"))
                }
            }
            Sign::Positive => Ok(Self::normalized(Sign::Positive, self.ln_abs * p)),
            Sign::Negative => {
                if p.fract() != 0.0 || !p.is_finite() {
                    return Err(domain(format!(
                        "negative base raised to non-integer power {p}"
                    )));
                }
                let odd = (p % 2.0).abs() == 1.0;
                let sign = if odd { Sign::Negative } else { Sign::Positive };
                Ok(Self::normalized(sign, self.ln_abs * p))
            }
        }
    }

    pub fn sqrt(&self) -> Result<Self> {
        if self.sign == Sign::Negative {
            return Err(domain("square root of a negative value"));
        }
        self.pow(0.5)
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.is_zero() {
            return Err(domain("division by zero"));
        }
        Ok(Self::normalized(
            self.sign.times(rhs.sign),
            self.ln_abs - rhs.ln_abs,
        ))
    }

    /// Decimal rendering `m.mmmmmmmmmmmmmmmmeE` with 17 significant digits,
    /// valid far outside the `f64` exponent range.
    pub fn to_decimal_string(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        if self.ln_abs.is_infinite() {
            return if self.sign == Sign::Negative { "-inf" } else { "inf" }.to_string();
        }
        let sign = if self.sign == Sign::Negative { "-" } else { "" };
        let real = self.ln_abs.exp();
        if real.is_normal() {
            return format!("{sign}{real:.16e}");
        }
        let log10 = self.log10_abs();
        let mut exponent = log10.floor();
        let mut mantissa = 10f64.powf(log10 - exponent);
        if mantissa >= 10.0 {
            mantissa /= 10.0;
            exponent += 1.0;
        }
        format!("{sign}{mantissa:.16}e{exponent}")
    }
}

impl Default for LogScalar {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogScalar({:?}, ln {})", self.sign, self.ln_abs)
    }
}

impl fmt::Display for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl Ord for LogScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let by_mag = self.ln_abs.total_cmp(&other.ln_abs);
        match self.sign {
            Sign::Zero => Ordering::Equal,
            Sign::Positive => by_mag,
            Sign::Negative => by_mag.reverse(),
        }
    }
}

impl PartialOrd for LogScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for LogScalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for LogScalar {}

impl Mul for LogScalar {
    type Output = LogScalar;

    // Magnitudes multiply by adding logarithms.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: LogScalar) -> LogScalar {
        LogScalar::normalized(self.sign.times(rhs.sign), self.ln_abs + rhs.ln_abs)
    }
}

impl Div for LogScalar {
    type Output = LogScalar;

    /// Panics on division by zero; use [`LogScalar::checked_div`] otherwise.
    fn div(self, rhs: LogScalar) -> LogScalar {
        self.checked_div(&rhs).expect("LogScalar division by zero")
    }
}

impl Neg for LogScalar {
    type Output = LogScalar;

    fn neg(self) -> LogScalar {
        LogScalar {
            sign: self.sign.flip(),
            ln_abs: self.ln_abs,
        }
    }
}

impl Add for LogScalar {
    type Output = LogScalar;

    fn add(self, rhs: LogScalar) -> LogScalar {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.ln_abs >= rhs.ln_abs {
            (self, rhs)
        } else {
            (rhs, self)
        };
        if big.ln_abs == f64::INFINITY {
            return big;
        }
        let d = small.ln_abs - big.ln_abs;
        if big.sign == small.sign {
            LogScalar::normalized(big.sign, big.ln_abs + d.exp().ln_1p())
        } else if -d < CANCELLATION_THRESHOLD {
            LogScalar::ZERO
        } else {
            LogScalar::normalized(big.sign, big.ln_abs + (-d.exp_m1()).ln())
        }
    }
}

impl Sub for LogScalar {
    type Output = LogScalar;

    fn sub(self, rhs: LogScalar) -> LogScalar {
        self + (-rhs)
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// `ln k!`, by compensated summation of `ln i` below
/// [`LOG_FACTORIAL_SUM_LIMIT`] and by `ln Γ(k + 1)` above.
pub fn log_factorial(k: u64) -> f64 {
    if k < LOG_FACTORIAL_SUM_LIMIT {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for i in 2..=k {
            let y = (i as f64).ln() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum
    } else {
        statrs::function::gamma::ln_gamma(k as f64 + 1.0)
    }
}
