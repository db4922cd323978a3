//! Error certificates for Gaussian radial basis function interpolation.
//!
//! The crate computes the constants of the exponential error bound
//! `Δ″ (C δ)^(c/δ) ‖f‖_h` for Gaussian kernels `exp(-β|x|²)`, and checks the
//! ingredients of that bound numerically: Stirling-type factorial sandwiches,
//! moments of the Gaussian spectral measure, the polynomial sampling
//! inequality on subdivided cubes, and the native-space norm of fitted
//! splines. Quantities that overflow `f64` are carried as [`LogScalar`]s.

// `!(x > 0.0)` rejects NaN on purpose; oracle literals keep full precision.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod constants;
pub mod error;
pub mod geometry;
pub mod interp;
pub mod moments;
pub mod numerics;
pub mod polybound;
pub mod quadrature;
pub mod render;
pub mod rng;

pub use constants::{bound_value, bound_value_ln, certificate, corollary_certificate, Certificate, Variant};
pub use error::{Error, Result};
pub use geometry::{Cube, PointSet};
pub use interp::{fit, GaussianKernel, SplineModel};
pub use moments::MomentReport;
pub use numerics::{LogScalar, Sign};
pub use polybound::{Polynomial, TrialReport};
