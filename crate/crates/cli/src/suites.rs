//! Verification sweeps. Each suite returns a serializable report whose
//! `pass` flag is true iff every asserted inequality holds.

use std::f64::consts::PI;

use gaussbound_core::constants::stirling_report;
use gaussbound_core::geometry::{Cube, PointSet};
use gaussbound_core::interp::{self, concentration_ratios, verify_inequality5, GaussianKernel, Inequality5Case};
use gaussbound_core::moments::{exact_moment, moment_report};
use gaussbound_core::polybound::{log_bound, minimal_q, run_trials, TrialConfig, TrialReport};
use gaussbound_core::render::{serialize_f64_17, Num17};
use gaussbound_core::rng::{derive_seed, stream, uniform};
use gaussbound_core::Result;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct StirlingCase {
    pub k: u64,
    pub ln_factorial: Num17,
    pub ln_lower: Num17,
    pub ln_upper_l3: Num17,
    pub ln_upper_l4: Num17,
    pub lower_holds: bool,
    pub upper_l3_holds: bool,
    pub upper_l4_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StirlingSuite {
    pub kmax: u64,
    pub checked: u64,
    pub lower_failures: u64,
    pub upper_l3_failures: u64,
    pub upper_l4_failures: u64,
    pub failing_cases: Vec<StirlingCase>,
    pub pass: bool,
}

pub fn stirling(kmax: u64) -> Result<StirlingSuite> {
    let mut suite = StirlingSuite {
        kmax,
        checked: 0,
        lower_failures: 0,
        upper_l3_failures: 0,
        upper_l4_failures: 0,
        failing_cases: Vec::new(),
        pass: true,
    };
    for k in 1..=kmax {
        let r = stirling_report(k)?;
        suite.checked += 1;
        let (lo, l3, l4) = (r.lower_holds(), r.upper_l3_holds(), r.upper_l4_holds());
        suite.lower_failures += u64::from(!lo);
        suite.upper_l3_failures += u64::from(!l3);
        suite.upper_l4_failures += u64::from(!l4);
        if !(lo && l3 && l4) {
            suite.failing_cases.push(StirlingCase {
                k,
                ln_factorial: Num17(r.exact.ln_abs()),
                ln_lower: Num17(r.lower.ln_abs()),
                ln_upper_l3: Num17(r.upper_l3.ln_abs()),
                ln_upper_l4: Num17(r.upper_l4.ln_abs()),
                lower_holds: lo,
                upper_l3_holds: l3,
                upper_l4_holds: l4,
            });
        }
    }
    suite.pass = suite.failing_cases.is_empty();
    Ok(suite)
}

pub const MOMENT_DIMENSIONS: std::ops::RangeInclusive<u32> = 1..=6;
pub const MOMENT_BETAS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
pub const MOMENT_MAX_ORDER: u64 = 40;
/// Relative agreement required between closed form and quadrature.
pub const MOMENT_ORACLE_TOL: f64 = 1e-8;
pub const MOMENT_MIN_ORACLE_CASES: usize = 60;
pub const SPOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct MomentCase {
    pub n: u32,
    pub k: u64,
    pub beta: Num17,
    pub ln_exact: Num17,
    pub ln_bound: Num17,
    pub bound_holds: bool,
    /// Quadrature value when the moment fits in a double.
    pub quadrature: Option<Num17>,
    pub oracle_rel_error: Option<Num17>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpotCheck {
    pub n: u32,
    pub k: u64,
    pub beta: Num17,
    pub expected: Num17,
    pub exact: Num17,
    pub rel_error: Num17,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentSuite {
    pub triples: usize,
    pub bound_failures: usize,
    pub oracle_cases: usize,
    pub oracle_failures: usize,
    pub oracle_max_rel_error: Num17,
    pub spot_checks: Vec<SpotCheck>,
    pub bound_pass: bool,
    pub oracle_pass: bool,
    pub pass: bool,
    pub cases: Vec<MomentCase>,
}

pub fn moment_triples() -> Vec<(u32, u64, f64)> {
    let mut out = Vec::new();
    for n in MOMENT_DIMENSIONS {
        for k in (2..=MOMENT_MAX_ORDER).step_by(2) {
            for beta in MOMENT_BETAS {
                out.push((n, k, beta));
            }
        }
    }
    out
}

pub fn moments() -> Result<MomentSuite> {
    let cases = moment_triples()
        .into_par_iter()
        .map(|(n, k, beta)| {
            let r = moment_report(n, k, beta)?;
            Ok(MomentCase {
                n,
                k,
                beta: Num17(beta),
                ln_exact: Num17(r.exact.ln_abs()),
                ln_bound: Num17(r.bound.ln_abs()),
                bound_holds: r.bound_holds(),
                quadrature: r.quadrature.map(Num17),
                oracle_rel_error: r.oracle_rel_error().map(Num17),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bound_failures = cases.iter().filter(|c| !c.bound_holds).count();
    let errors: Vec<f64> = cases.iter().filter_map(|c| c.oracle_rel_error.map(|e| e.0)).collect();
    let oracle_failures = errors.iter().filter(|&&e| e.is_nan() || e > MOMENT_ORACLE_TOL).count();
    let oracle_max = errors.iter().copied().fold(0.0, f64::max);

    let spots = [(1u32, 2u64, 1.0f64, 4.0 * PI), (2, 2, 1.0, 16.0 * PI * PI)];
    let spot_checks = spots
        .iter()
        .map(|&(n, k, beta, expected)| {
            let exact = exact_moment(n, k, beta)?.to_real();
            let rel = ((exact - expected) / expected).abs();
            Ok(SpotCheck {
                n,
                k,
                beta: Num17(beta),
                expected: Num17(expected),
                exact: Num17(exact),
                rel_error: Num17(rel),
                pass: rel <= SPOT_TOL,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let bound_pass = bound_failures == 0;
    let oracle_pass = oracle_failures == 0 && errors.len() >= MOMENT_MIN_ORACLE_CASES;
    let spots_pass = spot_checks.iter().all(|s| s.pass);
    Ok(MomentSuite {
        triples: cases.len(),
        bound_failures,
        oracle_cases: errors.len(),
        oracle_failures,
        oracle_max_rel_error: Num17(oracle_max),
        spot_checks,
        bound_pass,
        oracle_pass,
        pass: bound_pass && oracle_pass && spots_pass,
        cases,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PolyboundGroup {
    pub n: usize,
    pub k: u32,
    pub q: u64,
    pub log_bound: Num17,
    pub trials: usize,
    pub violations: usize,
    pub min_ratio: Num17,
    pub worst_ratio: Num17,
    pub failing_cases: Vec<TrialReport>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolyboundSuite {
    pub seed: u64,
    pub groups: Vec<PolyboundGroup>,
    pub pass: bool,
    #[serde(skip)]
    pub trials: Vec<TrialReport>,
}

pub const POLYBOUND_COMBOS: [(usize, u32); 9] = [(1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2), (3, 0), (3, 1), (3, 2)];

/// Trials on the unit cube; group `i` uses base seed `derive_seed(seed, i)`.
pub fn polybound(combos: &[(usize, u32)], trials: usize, seed: u64) -> Result<PolyboundSuite> {
    let mut groups = Vec::new();
    let mut all = Vec::new();
    for (i, &(n, k)) in combos.iter().enumerate() {
        let cube = Cube::unit(n)?;
        let reports = run_trials(n, k, &cube, derive_seed(seed, i as u64), trials, TrialConfig::default())?;
        let violations = reports.iter().filter(|r| !r.pass).count();
        let worst = reports.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let min = reports.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        groups.push(PolyboundGroup {
            n,
            k,
            q: minimal_q(n, k)?,
            log_bound: Num17(log_bound(n, k)?),
            trials: reports.len(),
            violations,
            min_ratio: Num17(min),
            worst_ratio: Num17(worst),
            failing_cases: reports.iter().filter(|r| !r.pass).cloned().collect(),
            pass: violations == 0,
        });
        all.extend(reports);
    }
    Ok(PolyboundSuite {
        seed,
        pass: groups.iter().all(|g| g.pass),
        groups,
        trials: all,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Inequality5Model {
    #[serde(serialize_with = "serialize_f64_17")]
    pub beta: f64,
    pub centers: Vec<Num17>,
    pub coefficients: Vec<Num17>,
    pub native_norm: Num17,
    pub trials: usize,
    pub violations: usize,
    pub worst_ratio: Num17,
    pub worst_case: Inequality5Case,
    pub failing_cases: Vec<Inequality5Case>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Inequality5Suite {
    pub seed: u64,
    pub models: Vec<Inequality5Model>,
    /// Ratios for test functions concentrating on the first model's centers
    /// (reported, not asserted).
    pub concentration_widths: Vec<Num17>,
    pub concentration_ratios: Vec<Num17>,
    pub pass: bool,
}

/// One to six centers in `[0, 3]` separated by at least `0.3 / sqrt(beta)`,
/// `beta` uniform on `[0.5, 4]`, data uniform on `[-1, 1]`.
pub fn random_model(seed: u64) -> Result<interp::SplineModel> {
    let mut rng = stream(seed);
    let beta = uniform(&mut rng, 0.5, 4.0);
    let count = 1 + (uniform(&mut rng, 0.0, 6.0) as usize).min(5);
    let min_sep = 0.3 / beta.sqrt();
    let mut xs: Vec<f64> = Vec::with_capacity(count);
    while xs.len() < count {
        let x = uniform(&mut rng, 0.0, 3.0);
        if xs.iter().all(|y| (x - y).abs() >= min_sep) {
            xs.push(x);
        }
    }
    let values: Vec<f64> = (0..count).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
    interp::fit(GaussianKernel::new(beta, 1)?, &PointSet::from_flat(1, xs)?, &values)
}

pub const CONCENTRATION_WIDTHS: [f64; 4] = [0.5, 0.2, 0.1, 0.05];

pub fn inequality5(models: usize, trials: usize, seed: u64) -> Result<Inequality5Suite> {
    let mut out = Vec::with_capacity(models);
    let mut concentration = Vec::new();
    for m in 0..models as u64 {
        let model = random_model(derive_seed(seed, 2 * m))?;
        let report = verify_inequality5(&model, derive_seed(seed, 2 * m + 1), trials)?;
        let worst_case = report
            .cases
            .iter()
            .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
            .cloned()
            .expect("at least one trial");
        if m == 0 {
            let widths: Vec<f64> = CONCENTRATION_WIDTHS.iter().map(|w| w / model.kernel().beta().sqrt()).collect();
            concentration = widths.iter().copied().zip(concentration_ratios(&model, &widths)?).collect();
        }
        out.push(Inequality5Model {
            beta: model.kernel().beta(),
            centers: model.centers().as_flat().iter().map(|&x| Num17(x)).collect(),
            coefficients: model.coefficients().iter().map(|&c| Num17(c)).collect(),
            native_norm: Num17(report.native_norm),
            trials: report.trials,
            violations: report.violations,
            worst_ratio: Num17(report.worst_ratio),
            worst_case,
            failing_cases: report.cases.iter().filter(|c| !c.pass).cloned().collect(),
        });
    }
    Ok(Inequality5Suite {
        seed,
        pass: out.iter().all(|m| m.violations == 0),
        models: out,
        concentration_widths: concentration.iter().map(|&(w, _)| Num17(w)).collect(),
        concentration_ratios: concentration.iter().map(|&(_, r)| Num17(r)).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AllSuites {
    pub stirling: StirlingSuite,
    pub moments: MomentSuite,
    pub polybound: PolyboundSuite,
    pub inequality5: Inequality5Suite,
    pub pass: bool,
}
