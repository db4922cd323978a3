//! `gaussbound` command-line harness: certificate constants, verification
//! suites, convergence experiments and spline fitting with CSV/JSON I/O.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 numerical failure.

pub mod certify;
pub mod converge;
pub mod suites;

use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gaussbound_core::constants::Variant;
use gaussbound_core::geometry::{self, cover_check, fill_distance, Cube, PointSet};
use gaussbound_core::interp::{fit_with, FitOptions, GaussianKernel, SplineModel};
use gaussbound_core::render::{fmt17, Num17};
use gaussbound_core::Error;
use serde::Serialize;

pub const EXIT_VERIFICATION_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "gaussbound", version, about = "Error certificates for Gaussian RBF interpolation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print every constant of the error certificate as JSON.
    Certify(CertifyArgs),
    /// Run a verification suite; exits 1 if any checked inequality fails.
    Verify(VerifyArgs),
    /// Interpolation error on shrinking jittered grids, as CSV.
    Converge(ConvergeArgs),
    /// Bracket the fill distance of a point set in a cube.
    FillDistance(FillDistanceArgs),
    /// Fit a Gaussian spline to `x_1,...,x_n,value` rows; writes model JSON.
    Fit(FitArgs),
    /// Evaluate a model JSON at the points of a CSV file.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    General,
    N1Improved,
    FillDistance,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::General => Variant::General,
            VariantArg::N1Improved => Variant::N1Improved,
            VariantArg::FillDistance => Variant::FillDistance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaseArg {
    General,
    N1Improved,
}

impl From<BaseArg> for Variant {
    fn from(v: BaseArg) -> Self {
        match v {
            BaseArg::General => Variant::General,
            BaseArg::N1Improved => Variant::N1Improved,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=20))]
    pub n: u32,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b0: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::General)]
    pub variant: VariantArg,
    /// Certificate the fill-distance form is derived from.
    #[arg(long, value_enum, default_value_t = BaseArg::General)]
    pub from: BaseArg,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Stirling,
    Moments,
    Polybound,
    Inequality5,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Largest k of the factorial sweep.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub kmax: u64,
    /// Dimension of the polynomial trials (all of 1..=3 when omitted).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=3))]
    pub n: Option<u64>,
    /// Degree bound of the polynomial trials (all of 0..=2 when omitted).
    #[arg(long, value_parser = clap::value_parser!(u32).range(0..=4))]
    pub k: Option<u32>,
    /// Polynomial trials per (n, k).
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Spline models of the inequality suite.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub models: u64,
    /// Test functions per spline model.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub phi_trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also write every polynomial trial as CSV.
    #[arg(long)]
    pub trials_csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Spline,
    Zero,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=2))]
    pub n: u64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b0: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::General)]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value_t = BaseArg::General)]
    pub from: BaseArg,
    /// Comma-separated grid spacings.
    #[arg(long, value_delimiter = ',')]
    pub delta: Vec<f64>,
    /// Side of the cube [0, side]^n; defaults to b0.
    #[arg(long)]
    pub side: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = TargetArg::Spline)]
    pub target: TargetArg,
    #[arg(long, default_value_t = 5)]
    pub target_centers: usize,
    /// Cells per axis of the fill-distance scan.
    #[arg(long)]
    pub fill_resolution: Option<u64>,
    /// Evaluation lattice points per axis for the maximum error.
    #[arg(long)]
    pub eval_points: Option<u64>,
    /// Diagonal jitter added before factoring (off by default).
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct FillDistanceArgs {
    /// Point CSV (one point per row); `-` reads standard input.
    #[arg(long)]
    pub points: PathBuf,
    /// Minimal corner of the cube, comma-separated; the origin by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lo: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub side: f64,
    /// Grid cells per axis; about 10^6 cells in total by default.
    #[arg(long)]
    pub resolution: Option<u64>,
    /// Also run the subcube-cover test at this spacing.
    #[arg(long)]
    pub delta: Option<f64>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV of `x_1,...,x_n,value` rows; `-` reads standard input.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Point CSV; `-` reads standard input.
    #[arg(long)]
    pub points: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
}

/// Result of a successful command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    VerificationFailed,
}

/// Argument values rejected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() || cause.downcast_ref::<io::Error>().is_some() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::InvalidArgument(_)
                | Error::Domain(_)
                | Error::Range(_)
                | Error::Resource(_)
                | Error::DimensionMismatch { .. }
                | Error::Parse { .. } => EXIT_USAGE,
                Error::OutOfCertificate { .. }
                | Error::IllConditioned { .. }
                | Error::Convergence(_)
                | Error::Overflow(_)
                | Error::Degenerate(_) => EXIT_NUMERICAL,
            };
        }
    }
    EXIT_NUMERICAL
}

fn emit(out: &OutArg, bytes: &[u8]) -> anyhow::Result<()> {
    match &out.out {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: &OutArg, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, text.as_bytes())
}

fn open_input(path: &Path) -> anyhow::Result<Box<dyn Read>> {
    if path == Path::new("-") {
        Ok(Box::new(io::stdin()))
    } else {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        Ok(Box::new(BufReader::new(file)))
    }
}

fn read_points(path: &Path) -> anyhow::Result<PointSet> {
    geometry::read_points_csv(open_input(path)?).with_context(|| format!("reading points from {}", path.display()))
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn check_positive(name: &str, v: f64) -> anyhow::Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be positive and finite, got {v}")))
    }
}

pub fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Certify(a) => cmd_certify(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Converge(a) => cmd_converge(a),
        Command::FillDistance(a) => cmd_fill_distance(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

fn cmd_certify(a: &CertifyArgs) -> anyhow::Result<Outcome> {
    check_positive("beta", a.beta)?;
    check_positive("b0", a.b0)?;
    let variant = Variant::from(a.variant);
    let base = Variant::from(a.from);
    if (variant == Variant::N1Improved || (variant == Variant::FillDistance && base == Variant::N1Improved)) && a.n != 1 {
        return Err(usage("the n1-improved constants require --n 1"));
    }
    let report = certify::report(a.n, a.beta, a.b0, variant, base)?;
    emit_json(&a.out, &report)?;
    Ok(Outcome::Success)
}

fn polybound_combos(a: &VerifyArgs) -> Vec<(usize, u32)> {
    let ns: Vec<usize> = a.n.map_or((1..=3).collect(), |n| vec![n as usize]);
    let ks: Vec<u32> = a.k.map_or((0..=2).collect(), |k| vec![k]);
    ns.iter().flat_map(|&n| ks.iter().map(move |&k| (n, k))).collect()
}

fn cmd_verify(a: &VerifyArgs) -> anyhow::Result<Outcome> {
    let combos = polybound_combos(a);
    let write_trials = |suite: &suites::PolyboundSuite| -> anyhow::Result<()> {
        if let Some(path) = &a.trials_csv {
            let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
            gaussbound_core::polybound::write_trials_csv(io::BufWriter::new(file), &suite.trials)?;
        }
        Ok(())
    };
    let pass = match a.suite {
        Suite::Stirling => {
            let r = suites::stirling(a.kmax)?;
            emit_json(&a.out, &r)?;
            r.pass
        }
        Suite::Moments => {
            let r = suites::moments()?;
            emit_json(&a.out, &r)?;
            r.pass
        }
        Suite::Polybound => {
            let r = suites::polybound(&combos, a.trials as usize, a.seed)?;
            write_trials(&r)?;
            emit_json(&a.out, &r)?;
            r.pass
        }
        Suite::Inequality5 => {
            let r = suites::inequality5(a.models as usize, a.phi_trials as usize, a.seed)?;
            emit_json(&a.out, &r)?;
            r.pass
        }
        Suite::All => {
            let stirling = suites::stirling(a.kmax)?;
            let moments = suites::moments()?;
            let polybound = suites::polybound(&combos, a.trials as usize, a.seed)?;
            write_trials(&polybound)?;
            let inequality5 = suites::inequality5(a.models as usize, a.phi_trials as usize, a.seed)?;
            let pass = stirling.pass && moments.pass && polybound.pass && inequality5.pass;
            let r = suites::AllSuites {
                stirling,
                moments,
                polybound,
                inequality5,
                pass,
            };
            emit_json(&a.out, &r)?;
            pass
        }
    };
    Ok(if pass { Outcome::Success } else { Outcome::VerificationFailed })
}

fn cmd_converge(a: &ConvergeArgs) -> anyhow::Result<Outcome> {
    check_positive("beta", a.beta)?;
    check_positive("b0", a.b0)?;
    let n = a.n as usize;
    let variant = Variant::from(a.variant);
    let base = Variant::from(a.from);
    if (variant == Variant::N1Improved || (variant == Variant::FillDistance && base == Variant::N1Improved)) && n != 1 {
        return Err(usage("the n1-improved constants require --n 1"));
    }
    let mut config = converge::ConvergeConfig::defaults(n);
    config.beta = a.beta;
    config.b0 = a.b0;
    config.variant = variant;
    config.base = base;
    if !a.delta.is_empty() {
        config.deltas = a.delta.clone();
    }
    config.side = a.side.unwrap_or(a.b0);
    config.seed = a.seed;
    config.target = match a.target {
        TargetArg::Spline => converge::Target::Spline,
        TargetArg::Zero => converge::Target::Zero,
    };
    config.target_centers = a.target_centers;
    if let Some(r) = a.fill_resolution {
        config.fill_resolution = r;
    }
    if let Some(e) = a.eval_points {
        config.eval_points = e;
    }
    config.jitter = a.jitter;
    let rows = converge::run(&config)?;
    let mut buf = Vec::new();
    converge::write_csv(&mut buf, &rows, variant)?;
    emit(&a.out, &buf)?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct FillDistanceReport {
    n: usize,
    num_points: usize,
    min_corner: Vec<Num17>,
    side: Num17,
    resolution: u64,
    lower: Num17,
    upper: Num17,
    #[serde(skip_serializing_if = "Option::is_none")]
    cover: Option<CoverSummary>,
}

#[derive(Serialize)]
struct CoverSummary {
    delta: Num17,
    pass: bool,
    cells_per_axis: u64,
    empty_cells: u64,
    witness_index: Option<Vec<u64>>,
    witness_min_corner: Option<Vec<Num17>>,
    witness_side: Option<Num17>,
}

/// Largest per-axis resolution with at most about 10^6 cells.
fn default_resolution(n: usize) -> u64 {
    ((1e6f64).powf(1.0 / n as f64).floor() as u64).max(2)
}

fn cmd_fill_distance(a: &FillDistanceArgs) -> anyhow::Result<Outcome> {
    let points = read_points(&a.points)?;
    let n = points.n();
    let lo = if a.lo.is_empty() { vec![0.0; n] } else { a.lo.clone() };
    if lo.len() != n {
        return Err(usage(format!("--lo has {} coordinates but the points have {n}", lo.len())));
    }
    let cube = Cube::new(lo, a.side)?;
    let resolution = a.resolution.unwrap_or_else(|| default_resolution(n));
    let fd = fill_distance(&cube, &points, resolution)?;
    let cover = match a.delta {
        Some(delta) => {
            let r = cover_check(&cube, &points, delta)?;
            Some(CoverSummary {
                delta: Num17(delta),
                pass: r.pass,
                cells_per_axis: r.cells_per_axis,
                empty_cells: r.empty_cells,
                witness_index: r.witness.as_ref().map(|w| w.multi_index.clone()),
                witness_min_corner: r.witness.as_ref().map(|w| w.cell.min_corner().iter().map(|&x| Num17(x)).collect()),
                witness_side: r.witness.as_ref().map(|w| Num17(w.cell.side())),
            })
        }
        None => None,
    };
    emit_json(
        &a.out,
        &FillDistanceReport {
            n,
            num_points: points.len(),
            min_corner: cube.min_corner().iter().map(|&x| Num17(x)).collect(),
            side: Num17(cube.side()),
            resolution,
            lower: Num17(fd.lower),
            upper: Num17(fd.upper),
            cover,
        },
    )?;
    Ok(Outcome::Success)
}

fn cmd_fit(a: &FitArgs) -> anyhow::Result<Outcome> {
    check_positive("beta", a.beta)?;
    let rows = read_points(&a.data)?;
    if rows.n() < 2 {
        return Err(usage("fit data needs at least one coordinate column and a value column"));
    }
    let n = rows.n() - 1;
    let mut points = PointSet::new(n)?;
    let mut values = Vec::with_capacity(rows.len());
    for r in rows.iter() {
        points.push(&r[..n])?;
        values.push(r[n]);
    }
    let model = fit_with(GaussianKernel::new(a.beta, n)?, &points, &values, FitOptions { jitter: a.jitter })?;
    let mut text = model.to_json()?;
    text.push('\n');
    emit(&a.out, text.as_bytes())?;
    Ok(Outcome::Success)
}

fn cmd_eval(a: &EvalArgs) -> anyhow::Result<Outcome> {
    let text = std::fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let model = SplineModel::from_json(&text).with_context(|| format!("parsing {}", a.model.display()))?;
    let points = read_points(&a.points)?;
    if points.n() != model.n() {
        bail!(Error::DimensionMismatch {
            expected: model.n(),
            got: points.n()
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=model.n()).map(|d| format!("x{d}")).collect();
    header.push("s".into());
    w.write_record(&header)?;
    for p in points.iter() {
        let mut record: Vec<String> = p.iter().map(|&x| fmt17(x)).collect();
        record.push(fmt17(model.evaluate(p)?));
        w.write_record(&record)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv write failed: {e}"))?;
    emit(&a.out, &bytes)?;
    Ok(Outcome::Success)
}
