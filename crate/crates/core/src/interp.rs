//! Gaussian spline interpolation `s(x) = sum_j c_j exp(-beta |x - x_j|^2)`.
//!
//! The kernel is positive definite, so there is no polynomial part and the
//! coefficients solve `A c = f` with `A_ij = h(x_i - x_j)`. The native-space
//! norm of a spline is `sqrt(c^T A c)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::PointSet;
use crate::quadrature::{integrate, Tolerance};
use crate::render::{serialize_f64_17, serialize_slice17, Num17};
use crate::rng::{derive_seed, stream, uniform};

/// Relative residual allowed at the centers after a fit.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    beta: f64,
    n: usize,
}

impl GaussianKernel {
    pub fn new(beta: f64, n: usize) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid(format!("beta must be positive and finite, got {beta}")));
        }
        if n == 0 {
            return Err(invalid("kernel dimension must be at least 1"));
        }
        Ok(GaussianKernel { beta, n })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(x.len())?;
        self.check(y.len())?;
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        (-self.beta * r2).exp()
    }

    fn check(&self, got: usize) -> Result<()> {
        if got == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.n, got })
        }
    }

    /// Dense kernel matrix on `points`, row-major.
    pub fn matrix(&self, points: &PointSet) -> Result<Vec<f64>> {
        self.check(points.n())?;
        let m = points.len();
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            a[i * m + i] = 1.0;
            for j in 0..i {
                let v = self.eval_unchecked(points.point(i), points.point(j));
                a[i * m + j] = v;
                a[j * m + i] = v;
            }
        }
        Ok(a)
    }
}

/// Lower-triangular factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq)]
struct Cholesky {
    m: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Fails with the pivot index and the diagonal ratio seen so far.
    fn factor(a: &[f64], m: usize) -> std::result::Result<Self, (usize, f64)> {
        let mut l = vec![0.0; m * m];
        let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
        for j in 0..m {
            let row_j = j * m;
            let mut d = a[row_j + j];
            for k in 0..j {
                d -= l[row_j + k] * l[row_j + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                let ratio = if dmin.is_finite() { f64::INFINITY } else { f64::NAN };
                return Err((j, ratio));
            }
            let ljj = d.sqrt();
            dmin = dmin.min(ljj);
            dmax = dmax.max(ljj);
            l[row_j + j] = ljj;
            for i in j + 1..m {
                let row_i = i * m;
                let mut s = a[row_i + j];
                for k in 0..j {
                    s -= l[row_i + k] * l[row_j + k];
                }
                l[row_i + j] = s / ljj;
            }
        }
        Ok(Cholesky { m, l })
    }

    fn diagonal_ratio(&self) -> f64 {
        let diag = (0..self.m).map(|i| self.l[i * self.m + i]);
        let (lo, hi) = diag.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        hi / lo
    }

    /// Solves `L y = b`.
    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = b.to_vec();
        for i in 0..m {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * m + k] * y[k];
            }
            y[i] = s / self.l[i * m + i];
        }
        y
    }

    /// Solves `L^T x = y`.
    fn backward(&self, mut y: Vec<f64>) -> Vec<f64> {
        let m = self.m;
        for i in (0..m).rev() {
            let mut s = y[i];
            for k in i + 1..m {
                s -= self.l[k * m + i] * y[k];
            }
            y[i] = s / self.l[i * m + i];
        }
        y
    }

    /// `|L^T c|`.
    fn energy_norm(&self, c: &[f64]) -> f64 {
        let m = self.m;
        let mut acc = 0.0;
        for j in 0..m {
            let mut s = 0.0;
            for i in j..m {
                s += self.l[i * m + j] * c[i];
            }
            acc += s * s;
        }
        acc.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Added to the diagonal before factoring. Zero unless requested; a
    /// jittered model no longer interpolates exactly and its residual is
    /// reported rather than enforced.
    pub jitter: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { jitter: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplineModel {
    kernel: GaussianKernel,
    centers: PointSet,
    coefficients: Vec<f64>,
    /// Squared ratio of the largest to the smallest Cholesky diagonal entry;
    /// a cheap lower estimate of the spectral condition number.
    condition_estimate: f64,
    jitter: f64,
    max_residual: f64,
    factor: Option<Cholesky>,
}

impl SplineModel {
    /// A spline with prescribed coefficients (no fit, no factor).
    pub fn from_coefficients(kernel: GaussianKernel, centers: PointSet, coefficients: Vec<f64>) -> Result<Self> {
        kernel.check(centers.n())?;
        if coefficients.len() != centers.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                got: coefficients.len(),
            });
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coefficients must be finite"));
        }
        Ok(SplineModel {
            kernel,
            centers,
            coefficients,
            condition_estimate: f64::NAN,
            jitter: 0.0,
            max_residual: f64::NAN,
            factor: None,
        })
    }

    pub fn kernel(&self) -> GaussianKernel {
        self.kernel
    }

    pub fn n(&self) -> usize {
        self.kernel.n
    }

    pub fn centers(&self) -> &PointSet {
        &self.centers
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `NaN` for models that were not produced by [`fit`].
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Largest `|s(x_i) - f_i|` at fit time; `NaN` for unfitted models.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.kernel.check(x.len())?;
        Ok(self.evaluate_unchecked(x))
    }

    #[inline]
    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(&self.coefficients)
            .map(|(p, &c)| c * self.kernel.eval_unchecked(p, x))
            .sum()
    }

    /// `max_{y in grid} |f_true(y) - s(y)|`.
    pub fn evaluate_max_error<F>(&self, f_true: F, grid: &PointSet) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.kernel.check(grid.n())?;
        let worst = grid
            .as_flat()
            .par_chunks_exact(grid.n())
            .map(|y| (f_true(y) - self.evaluate_unchecked(y)).abs())
            .reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) });
        Ok(worst)
    }

    /// `sqrt(c^T A c)`.
    pub fn native_norm(&self) -> f64 {
        if self.coefficients.iter().all(|&c| c == 0.0) {
            return 0.0;
        }
        match &self.factor {
            Some(l) if self.jitter == 0.0 => l.energy_norm(&self.coefficients),
            _ => self.quadratic_form().max(0.0).sqrt(),
        }
    }

    fn quadratic_form(&self) -> f64 {
        let m = self.centers.len();
        let mut acc = 0.0;
        for i in 0..m {
            let ci = self.coefficients[i];
            acc += ci * ci;
            let mut row = 0.0;
            for j in 0..i {
                row += self.coefficients[j] * self.kernel.eval_unchecked(self.centers.point(i), self.centers.point(j));
            }
            acc += 2.0 * ci * row;
        }
        acc
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            #[serde(serialize_with = "serialize_f64_17")]
            beta: &'a f64,
            n: usize,
            centers: Vec<Vec<Num17>>,
            #[serde(serialize_with = "serialize_slice17")]
            coefficients: &'a [f64],
        }
        let out = Out {
            beta: &self.kernel.beta,
            n: self.kernel.n,
            centers: self.centers.iter().map(|p| p.iter().map(|&x| Num17(x)).collect()).collect(),
            coefficients: &self.coefficients,
        };
        serde_json::to_string_pretty(&out).map_err(|e| invalid(format!("model serialization failed: {e}")))
    }

    /// Inverse of [`SplineModel::to_json`]. The kernel matrix is re-factored
    /// when possible so that the condition estimate is available again.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct In {
            beta: f64,
            n: usize,
            centers: Vec<Vec<f64>>,
            coefficients: Vec<f64>,
        }
        let parsed: In = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        let kernel = GaussianKernel::new(parsed.beta, parsed.n)?;
        let centers = PointSet::from_points(parsed.n, &parsed.centers)?;
        let mut model = SplineModel::from_coefficients(kernel, centers, parsed.coefficients)?;
        let a = kernel.matrix(&model.centers)?;
        if let Ok(l) = Cholesky::factor(&a, model.centers.len()) {
            model.condition_estimate = l.diagonal_ratio().powi(2);
            model.factor = Some(l);
        }
        Ok(model)
    }
}

/// First pair of identical points, if any.
fn find_duplicate(points: &PointSet) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    let lex = |a: &usize, b: &usize| {
        points
            .point(*a)
            .iter()
            .zip(points.point(*b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    order.sort_by(lex);
    order
        .windows(2)
        .find(|w| points.point(w[0]) == points.point(w[1]))
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
}

pub fn fit(kernel: GaussianKernel, points: &PointSet, values: &[f64]) -> Result<SplineModel> {
    fit_with(kernel, points, values, FitOptions::default())
}

pub fn fit_with(kernel: GaussianKernel, points: &PointSet, values: &[f64], options: FitOptions) -> Result<SplineModel> {
    kernel.check(points.n())?;
    if points.is_empty() {
        return Err(invalid("cannot fit on an empty point set"));
    }
    if values.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("data values must be finite"));
    }
    if !(options.jitter >= 0.0 && options.jitter.is_finite()) {
        return Err(invalid("jitter must be finite and non-negative"));
    }
    if let Some((i, j)) = find_duplicate(points) {
        return Err(invalid(format!("duplicate centers at indices {i} and {j}")));
    }
    let m = points.len();
    let a = kernel.matrix(points)?;
    let mut shifted = a.clone();
    for i in 0..m {
        shifted[i * m + i] += options.jitter;
    }
    let factored = Cholesky::factor(&shifted, m);
    let scale = values.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        // s = 0 interpolates zero data exactly whatever the conditioning.
        let (condition_estimate, factor) = match factored {
            Ok(l) => (l.diagonal_ratio().powi(2), Some(l)),
            Err((_, ratio)) => (ratio, None),
        };
        return Ok(SplineModel {
            kernel,
            centers: points.clone(),
            coefficients: vec![0.0; m],
            condition_estimate,
            jitter: options.jitter,
            max_residual: 0.0,
            factor,
        });
    }
    let l = factored.map_err(|(pivot, ratio)| Error::IllConditioned {
        condition_estimate: ratio,
        reason: format!("non-positive pivot at row {pivot} of {m}"),
    })?;
    let condition_estimate = l.diagonal_ratio().powi(2);
    let coefficients = l.backward(l.forward(values));
    let max_residual = (0..m)
        .map(|i| {
            let row = &a[i * m..(i + 1) * m];
            let s: f64 = row.iter().zip(&coefficients).map(|(x, c)| x * c).sum();
            (s - values[i]).abs()
        })
        .fold(0.0, f64::max);
    let allowed = RESIDUAL_TOLERANCE * scale;
    if options.jitter == 0.0 && !(max_residual <= allowed) {
        return Err(Error::IllConditioned {
            condition_estimate,
            reason: format!("residual {max_residual:e} exceeds {allowed:e}"),
        });
    }
    Ok(SplineModel {
        kernel,
        centers: points.clone(),
        coefficients,
        condition_estimate,
        jitter: options.jitter,
        max_residual,
        factor: Some(l),
    })
}

/// `a * exp(-1 / (1 - t^2))` with `t = (x - center) / width`, zero for `|t| >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    #[serde(serialize_with = "serialize_f64_17")]
    pub center: f64,
    #[serde(serialize_with = "serialize_f64_17")]
    pub width: f64,
    #[serde(serialize_with = "serialize_f64_17")]
    pub amplitude: f64,
}

impl Bump {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.width;
        let s = 1.0 - t * t;
        if s <= 0.0 {
            0.0
        } else {
            self.amplitude * (-1.0 / s).exp()
        }
    }

    fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }
}

/// One draw of the inequality check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inequality5Case {
    pub seed: u64,
    pub bumps: Vec<Bump>,
    /// `|integral s phi|`
    #[serde(serialize_with = "serialize_f64_17")]
    pub lhs: f64,
    /// `(double integral h(x - y) phi(x) phi(y))^(1/2)`
    #[serde(serialize_with = "serialize_f64_17")]
    pub rhs: f64,
    /// `lhs / (norm * rhs)`, zero when `lhs` is zero.
    #[serde(serialize_with = "serialize_f64_17")]
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inequality5Report {
    #[serde(serialize_with = "serialize_f64_17")]
    pub native_norm: f64,
    pub trials: usize,
    pub violations: usize,
    #[serde(serialize_with = "serialize_f64_17")]
    pub worst_ratio: f64,
    pub cases: Vec<Inequality5Case>,
}

impl Inequality5Report {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

/// Relative quadrature tolerance of the inequality check.
pub const INEQUALITY5_QUAD_TOL: f64 = 1e-8;
/// Multiplicative slack on the right-hand side.
pub const INEQUALITY5_SLACK: f64 = 1e-6;

fn phi_quad_tol() -> Tolerance {
    Tolerance::relative(INEQUALITY5_QUAD_TOL).with_abs(1e-300)
}

/// `integral s(x) b(x) dx` over the support of the bump.
fn spline_against_bump(model: &SplineModel, bump: &Bump) -> Result<f64> {
    let (lo, hi) = bump.support();
    // Tolerance against the absolute integrand so sign changes of s do not
    // stall refinement.
    let scale = integrate(|x| (model.evaluate_unchecked(&[x]) * bump.eval(x)).abs(), lo, hi, phi_quad_tol())?.value;
    let tol = Tolerance::relative(INEQUALITY5_QUAD_TOL).with_abs(INEQUALITY5_QUAD_TOL * 1e-3 * scale);
    Ok(integrate(|x| model.evaluate_unchecked(&[x]) * bump.eval(x), lo, hi, tol)?.value)
}

/// `double integral h(x - y) b_i(x) b_l(y) dx dy`.
fn bump_pair_energy(beta: f64, bi: &Bump, bl: &Bump) -> Result<f64> {
    let (xlo, xhi) = bi.support();
    let (ylo, yhi) = bl.support();
    let mut failure = None;
    let outer = integrate(
        |x| {
            let inner = integrate(|y| (-beta * (x - y) * (x - y)).exp() * bl.eval(y), ylo, yhi, phi_quad_tol());
            match inner {
                Ok(e) => bi.eval(x) * e.value,
                Err(err) => {
                    failure.get_or_insert(err);
                    0.0
                }
            }
        },
        xlo,
        xhi,
        phi_quad_tol(),
    )?;
    match failure {
        Some(err) => Err(err),
        None => Ok(outer.value),
    }
}

/// Evaluates both sides of the defining inequality for `phi = sum of bumps`.
pub fn inequality5_case(model: &SplineModel, bumps: &[Bump], seed: u64) -> Result<Inequality5Case> {
    if model.n() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: model.n() });
    }
    if bumps.is_empty() {
        return Err(invalid("test function needs at least one bump"));
    }
    let lhs = bumps
        .iter()
        .map(|b| spline_against_bump(model, b))
        .sum::<Result<f64>>()?
        .abs();
    let mut energy = 0.0;
    for (i, bi) in bumps.iter().enumerate() {
        energy += bump_pair_energy(model.kernel.beta, bi, bi)?;
        for bl in &bumps[i + 1..] {
            energy += 2.0 * bump_pair_energy(model.kernel.beta, bi, bl)?;
        }
    }
    let rhs = energy.max(0.0).sqrt();
    let norm = model.native_norm();
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / (norm * rhs) };
    Ok(Inequality5Case {
        seed,
        bumps: bumps.to_vec(),
        lhs,
        rhs,
        ratio,
        pass: lhs <= norm * rhs * (1.0 + INEQUALITY5_SLACK),
    })
}

/// One to three bumps with centers near the spline's centers.
pub fn random_bumps(model: &SplineModel, seed: u64) -> Vec<Bump> {
    let xs = model.centers.as_flat();
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let reach = 1.0 / model.kernel.beta.sqrt();
    let mut rng = stream(seed);
    let count = 1 + (uniform(&mut rng, 0.0, 3.0) as usize).min(2);
    (0..count)
        .map(|_| Bump {
            center: uniform(&mut rng, lo - reach, hi + reach),
            width: uniform(&mut rng, 0.05, 1.0) * reach,
            amplitude: uniform(&mut rng, -1.0, 1.0),
        })
        .collect()
}

/// Checks `|integral s phi| <= ||s||_h (double integral h phi phi)^(1/2)` for
/// `trials` random bump combinations (one-dimensional models only).
pub fn verify_inequality5(model: &SplineModel, phi_seed: u64, trials: usize) -> Result<Inequality5Report> {
    if model.n() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: model.n() });
    }
    if trials == 0 {
        return Err(invalid("at least one trial is required"));
    }
    let cases = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(phi_seed, t);
            inequality5_case(model, &random_bumps(model, seed), seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = cases.iter().filter(|c| !c.pass).count();
    let worst_ratio = cases.iter().map(|c| c.ratio).fold(0.0, f64::max);
    Ok(Inequality5Report {
        native_norm: model.native_norm(),
        trials,
        violations,
        worst_ratio,
        cases,
    })
}

/// Ratios for `phi_w = sum_j c_j b((x - x_j)/w) / Z_w` as `w` shrinks; they
/// approach 1 as `phi_w` tends to `sum_j c_j delta_{x_j}`.
pub fn concentration_ratios(model: &SplineModel, widths: &[f64]) -> Result<Vec<f64>> {
    // integral of exp(-1/(1-t^2)) over (-1, 1)
    const BUMP_MASS: f64 = 0.443_993_816_168_079_4;
    widths
        .iter()
        .map(|&w| {
            if !(w > 0.0) {
                return Err(invalid("widths must be positive"));
            }
            let bumps: Vec<Bump> = model
                .centers
                .as_flat()
                .iter()
                .zip(&model.coefficients)
                .map(|(&x, &c)| Bump {
                    center: x,
                    width: w,
                    amplitude: c / (BUMP_MASS * w),
                })
                .collect();
            Ok(inequality5_case(model, &bumps, 0)?.ratio)
        })
        .collect()
}
