//! Locale-independent number rendering shared by the CSV and JSON writers.
//!
//! Every real is written with 17 significant digits (`d.dddddddddddddddde±x`),
//! which round-trips any `f64` exactly.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::numerics::LogScalar;

/// 17-significant-digit scientific rendering; `nan`, `inf`, `-inf` for
/// non-finite values.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// JSON number with 17 significant digits; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num17(pub f64);

impl Serialize for Num17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(fmt17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

/// Serializes a `Vec<f64>`-like slice as 17-digit numbers.
pub fn serialize_slice17<S: Serializer>(values: &[f64], serializer: S) -> Result<S::Ok, S::Error> {
    serializer.collect_seq(values.iter().map(|&v| Num17(v)))
}

/// Serializes an `f64` field as a 17-digit number.
pub fn serialize_f64_17<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    Num17(*value).serialize(serializer)
}

/// An exact unsigned integer rendered as a bare JSON number token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BigUint(pub u128);

impl Serialize for BigUint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(self.0.to_string()).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

/// Report form of a [`LogScalar`]: sign, natural log of the magnitude, and a
/// decimal mantissa-exponent string.
#[derive(Debug, Clone, Serialize)]
pub struct LogRepr {
    pub sign: i8,
    pub ln: Num17,
    pub decimal: String,
}

impl From<LogScalar> for LogRepr {
    fn from(v: LogScalar) -> Self {
        LogRepr {
            sign: v.sign().as_i8(),
            ln: Num17(v.ln_abs()),
            decimal: v.to_decimal_string(),
        }
    }
}
