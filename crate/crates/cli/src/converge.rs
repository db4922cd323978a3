//! Empirical error of Gaussian interpolation on jittered grids of shrinking
//! spacing, next to the certified bound where it applies.

use std::io::Write;

use gaussbound_core::constants::{self, Certificate, Variant};
use gaussbound_core::geometry::{cover_check, fill_distance, jittered_grid, uniform_random, Cube, PointSet};
use gaussbound_core::interp::{fit_with, FitOptions, GaussianKernel, SplineModel};
use gaussbound_core::render::fmt17;
use gaussbound_core::rng::{derive_seed, stream, uniform};
use gaussbound_core::{Error, Result};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// A fixed Gaussian spline with centers inside the cube.
    Spline,
    /// The zero function.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeConfig {
    pub n: usize,
    pub beta: f64,
    pub b0: f64,
    pub variant: Variant,
    /// Base certificate of the fill-distance form.
    pub base: Variant,
    pub deltas: Vec<f64>,
    pub side: f64,
    pub seed: u64,
    pub target: Target,
    pub target_centers: usize,
    pub fill_resolution: u64,
    pub eval_points: u64,
    pub jitter: f64,
}

impl ConvergeConfig {
    /// Defaults for dimension `n`: spacings `0.2 .. 0.01` in one dimension
    /// and `0.2 .. 0.05` in two.
    pub fn defaults(n: usize) -> Self {
        ConvergeConfig {
            n,
            beta: 1.0,
            b0: 1.0,
            variant: Variant::General,
            base: Variant::General,
            deltas: if n == 1 {
                vec![0.2, 0.1, 0.05, 0.02, 0.01]
            } else {
                vec![0.2, 0.1, 0.05]
            },
            side: 1.0,
            seed: 1,
            target: Target::Spline,
            target_centers: 5,
            fill_resolution: if n == 1 { 4096 } else { 256 },
            eval_points: if n == 1 { 2001 } else { 101 },
            jitter: 0.0,
        }
    }
}

/// Whether the certificate applies at a row's spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundCell {
    Log10(f64),
    OutOfCertificate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub delta: f64,
    pub num_points: usize,
    pub fill_distance_lower: f64,
    pub fill_distance_upper: f64,
    pub cover_pass: bool,
    /// `None` when the fit failed.
    pub max_error: Option<f64>,
    /// `||f||_h` of the target.
    pub native_norm: f64,
    /// `||s||_h` of the interpolant.
    pub spline_norm: Option<f64>,
    pub log10_bound: BoundCell,
    /// `(c/x) log10(C x)` with `x` the spacing the certificate is stated in.
    pub exponent_log10: f64,
    pub condition_estimate: f64,
    pub jitter: f64,
    pub status: &'static str,
}

pub const CSV_HEADER: [&str; 15] = [
    "delta",
    "num_points",
    "fill_distance_lower",
    "fill_distance_upper",
    "cover_pass",
    "max_error",
    "log10_max_error",
    "native_norm",
    "spline_norm",
    "log10_bound",
    "exponent_log10",
    "condition_estimate",
    "jitter",
    "variant",
    "status",
];

fn validate(config: &ConvergeConfig) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidArgument(m));
    if !(1..=2).contains(&config.n) {
        return bad(format!("converge supports n in {{1, 2}}, got {}", config.n));
    }
    if config.deltas.is_empty() {
        return bad("at least one spacing is required".into());
    }
    if let Some(d) = config.deltas.iter().find(|&&d| !(d > 0.0 && d <= config.side)) {
        return bad(format!("spacing {d} is outside (0, side = {}]", config.side));
    }
    if !(config.side > 0.0 && config.side.is_finite()) {
        return bad("side must be positive".into());
    }
    if config.side < config.b0 {
        return bad(format!("cube side {} is below b0 = {}", config.side, config.b0));
    }
    if config.target_centers == 0 {
        return bad("the target spline needs at least one center".into());
    }
    if config.eval_points < 2 || config.fill_resolution == 0 {
        return bad("evaluation and fill-distance resolutions must be positive".into());
    }
    Ok(())
}

/// The target function and its kernel.
pub fn target_model(config: &ConvergeConfig, cube: &Cube) -> Result<SplineModel> {
    let kernel = GaussianKernel::new(config.beta, config.n)?;
    let centers = uniform_random(cube, config.target_centers, derive_seed(config.seed, u64::MAX))?;
    let coefficients = match config.target {
        Target::Zero => vec![0.0; centers.len()],
        Target::Spline => {
            let mut rng = stream(derive_seed(config.seed, u64::MAX - 1));
            (0..centers.len()).map(|_| uniform(&mut rng, -1.0, 1.0)).collect()
        }
    };
    SplineModel::from_coefficients(kernel, centers, coefficients)
}

fn evaluation_lattice(cube: &Cube, per_axis: u64) -> Result<PointSet> {
    let n = cube.n();
    let count = gaussbound_core::geometry::cell_count(per_axis, n)?;
    let step = cube.side() / (per_axis - 1) as f64;
    let mut coords = Vec::with_capacity(count as usize * n);
    for i in 0..count {
        let idx = gaussbound_core::geometry::cell_multi_index(i, per_axis, n);
        coords.extend((0..n).map(|d| cube.min_corner()[d] + idx[d] as f64 * step));
    }
    PointSet::from_flat(n, coords)
}

pub fn run(config: &ConvergeConfig) -> Result<Vec<ConvergenceRow>> {
    validate(config)?;
    let cube = Cube::new(vec![0.0; config.n], config.side)?;
    let base = constants::certificate(config.n as u32, config.beta, config.b0, if config.variant == Variant::FillDistance { config.base } else { config.variant })?;
    let cert: Certificate = if config.variant == Variant::FillDistance {
        constants::corollary_certificate(&base)?
    } else {
        base
    };
    let target = target_model(config, &cube)?;
    let norm_f = target.native_norm();
    let lattice = evaluation_lattice(&cube, config.eval_points)?;

    let mut rows = config
        .deltas
        .par_iter()
        .enumerate()
        .map(|(i, &delta)| row(config, &cube, &cert, &target, norm_f, &lattice, delta, derive_seed(config.seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn row(
    config: &ConvergeConfig,
    cube: &Cube,
    cert: &Certificate,
    target: &SplineModel,
    norm_f: f64,
    lattice: &PointSet,
    delta: f64,
    seed: u64,
) -> Result<ConvergenceRow> {
    let points = jittered_grid(cube, delta, seed)?;
    let cover = cover_check(cube, &points, delta)?;
    let fd = fill_distance(cube, &points, config.fill_resolution)?;
    let values: Vec<f64> = points.iter().map(|p| target.evaluate(p)).collect::<Result<_>>()?;

    // The fill-distance form is stated in d; the others in delta.
    let spacing = if cert.variant == Variant::FillDistance { fd.upper } else { delta };
    let log10_bound = match constants::bound_value(cert, spacing, norm_f) {
        Ok(v) => BoundCell::Log10(v.log10_abs()),
        Err(Error::OutOfCertificate { .. }) => BoundCell::OutOfCertificate,
        Err(e) => return Err(e),
    };
    let exponent_log10 = cert.c_exp / spacing * (cert.ln_c_base() + spacing.ln()) / std::f64::consts::LN_10;

    let mut out = ConvergenceRow {
        delta,
        num_points: points.len(),
        fill_distance_lower: fd.lower,
        fill_distance_upper: fd.upper,
        cover_pass: cover.pass,
        max_error: None,
        native_norm: norm_f,
        spline_norm: None,
        log10_bound,
        exponent_log10,
        condition_estimate: f64::NAN,
        jitter: config.jitter,
        status: "ok",
    };
    match fit_with(target.kernel(), &points, &values, FitOptions { jitter: config.jitter }) {
        Ok(model) => {
            let on_lattice = model.evaluate_max_error(|y| target.evaluate(y).unwrap_or(f64::NAN), lattice)?;
            let on_points = model.evaluate_max_error(|y| target.evaluate(y).unwrap_or(f64::NAN), &points)?;
            out.max_error = Some(on_lattice.max(on_points));
            out.spline_norm = Some(model.native_norm());
            out.condition_estimate = model.condition_estimate();
        }
        Err(Error::IllConditioned { condition_estimate, .. }) => {
            out.condition_estimate = condition_estimate;
            out.status = "ill-conditioned";
        }
        Err(e) => return Err(e),
    }
    if !cover.pass {
        out.status = "cover-failed";
    }
    Ok(out)
}

fn opt17(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

pub fn write_csv<W: Write>(writer: W, rows: &[ConvergenceRow], variant: Variant) -> Result<()> {
    let io = |e: csv::Error| Error::Resource(format!("csv write failed: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            fmt17(r.delta),
            r.num_points.to_string(),
            fmt17(r.fill_distance_lower),
            fmt17(r.fill_distance_upper),
            r.cover_pass.to_string(),
            opt17(r.max_error),
            opt17(r.max_error.map(f64::log10)),
            fmt17(r.native_norm),
            opt17(r.spline_norm),
            match r.log10_bound {
                BoundCell::Log10(v) => fmt17(v),
                BoundCell::OutOfCertificate => "out-of-certificate".to_string(),
            },
            fmt17(r.exponent_log10),
            fmt17(r.condition_estimate),
            fmt17(r.jitter),
            variant.as_str().to_string(),
            r.status.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Resource(format!("csv write failed: {e}")))
}
