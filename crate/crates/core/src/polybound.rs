//! Randomized trials of the polynomial sampling inequality
//! `sup_Q |p| <= exp(2 n gamma_n (k + 1)) max_Y |p|` for `p` of total degree
//! at most `k` and `Y` one point per cell of the `q^n` partition of `Q`,
//! `q = gamma_n (k + 1)`.
//!
//! `max_Y |p|` is exact: cells are scanned by branch and bound over blocks,
//! pruning a block only when an interval enclosure of `|p|` on it cannot beat
//! the best value found. `sup_Q |p|` is estimated from below by the maximum
//! over a lattice (including the cube's corners) and over `Y` itself.

use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::gamma_n;
use crate::error::{invalid, Error, Result};
use crate::geometry::{cell_count, cell_multi_index, subcube_sample_into, Cube};
use crate::numerics::LogScalar;
use crate::render::{fmt17, serialize_f64_17};
use crate::rng::{derive_seed, stream, uniform};

pub const MAX_DIMENSION: usize = 3;
pub const MAX_DEGREE: u32 = 4;

/// Lattice segments per axis used for `sup_Q |p|`.
pub const DEFAULT_SUP_SEGMENTS: u64 = 64;

/// Redraws allowed when a polynomial vanishes on all of `Y`.
const MAX_REDRAWS: u32 = 16;

/// Real polynomial in `n` variables of total degree at most `k`, kept as a
/// map from exponent multi-indices to coefficients.
///
/// Evaluation uses a dense `(k+1)^n` coefficient tensor and nested Horner
/// schemes, innermost in the last variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n: usize,
    k: u32,
    coefficients: BTreeMap<Vec<u32>, f64>,
    dense: Vec<f64>,
}

/// Exponent multi-indices of total degree at most `k`: ascending total
/// degree, then descending lexicographic order.
pub fn multi_indices(n: usize, k: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == n {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=left).rev() {
            prefix.push(a);
            rec(n, left - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=k {
        rec(n, total, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

impl Polynomial {
    pub fn new(n: usize, k: u32, coefficients: BTreeMap<Vec<u32>, f64>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("polynomial dimension must be at least 1"));
        }
        let side = k as usize + 1;
        let size = u32::try_from(n)
            .ok()
            .and_then(|e| side.checked_pow(e))
            .filter(|&s| s <= 1 << 20)
            .ok_or_else(|| Error::Resource(format!("dense tensor for n = {n}, k = {k} is too large")))?;
        let mut dense = vec![0.0; size];
        for (alpha, &c) in &coefficients {
            if alpha.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: alpha.len() });
            }
            if alpha.iter().sum::<u32>() > k {
                return Err(invalid(format!("monomial {alpha:?} exceeds degree {k}")));
            }
            if !c.is_finite() {
                return Err(invalid("coefficients must be finite"));
            }
            let flat = alpha.iter().fold(0usize, |acc, &a| acc * side + a as usize);
            dense[flat] = c;
        }
        Ok(Polynomial { n, k, coefficients, dense })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree_bound(&self) -> u32 {
        self.k
    }

    pub fn coefficients(&self) -> &BTreeMap<Vec<u32>, f64> {
        &self.coefficients
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let side = self.k as usize + 1;
        let mut buf = [0.0f64; 125];
        let size = self.dense.len();
        if size > buf.len() {
            return self.eval_monomials(x);
        }
        buf[..size].copy_from_slice(&self.dense);
        let mut len = size;
        for d in (0..self.n).rev() {
            len /= side;
            let xd = x[d];
            for j in 0..len {
                let chunk = &buf[j * side..(j + 1) * side];
                let v = chunk.iter().rev().fold(0.0, |acc, &c| acc * xd + c);
                buf[j] = v;
            }
        }
        buf[0]
    }

    /// Direct monomial sum, the reference for the Horner evaluator.
    pub fn eval_monomials(&self, x: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .map(|(alpha, &c)| c * alpha.iter().zip(x).map(|(&a, &xi)| xi.powi(a as i32)).product::<f64>())
            .sum()
    }

    /// Partial derivative with respect to `x_d`.
    fn derivative(&self, d: usize) -> Polynomial {
        let mut coefficients = BTreeMap::new();
        for (alpha, &c) in &self.coefficients {
            if alpha[d] > 0 {
                let mut beta = alpha.clone();
                beta[d] -= 1;
                *coefficients.entry(beta).or_insert(0.0) += c * alpha[d] as f64;
            }
        }
        Polynomial::new(self.n, self.k.saturating_sub(1), coefficients).expect("derivative of a valid polynomial")
    }

    /// Natural interval extension over the box `lo..hi`.
    fn enclose(&self, lo: &[f64], hi: &[f64]) -> Interval {
        let mut powers: Vec<Vec<Interval>> = Vec::with_capacity(self.n);
        for d in 0..self.n {
            let x = Interval { lo: lo[d], hi: hi[d] };
            powers.push((0..=self.k).map(|a| x.powi(a)).collect());
        }
        self.coefficients.iter().fold(Interval::ZERO, |acc, (alpha, &c)| {
            let term = alpha
                .iter()
                .enumerate()
                .fold(Interval::ONE, |t, (d, &a)| t.mul(powers[d][a as usize]));
            acc.add(term.scale(c))
        })
    }
}

/// Closed interval with plain floating-point endpoints; callers inflate
/// before comparing.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    fn add(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo + o.lo,
            hi: self.hi + o.hi,
        }
    }

    fn mul(self, o: Interval) -> Interval {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Interval {
            lo: p.iter().copied().fold(f64::INFINITY, f64::min),
            hi: p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn scale(self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval { lo: self.lo * c, hi: self.hi * c }
        } else {
            Interval { lo: self.hi * c, hi: self.lo * c }
        }
    }

    fn powi(self, a: u32) -> Interval {
        if a == 0 {
            return Interval::ONE;
        }
        let (l, h) = (self.lo.powi(a as i32), self.hi.powi(a as i32));
        if a % 2 == 1 || self.lo >= 0.0 {
            Interval { lo: l, hi: h }
        } else if self.hi <= 0.0 {
            Interval { lo: h, hi: l }
        } else {
            Interval { lo: 0.0, hi: l.max(h) }
        }
    }

    fn intersect(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo.max(o.lo),
            hi: self.hi.min(o.hi),
        }
    }

    fn abs_max(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
}

/// Enclosure of `p` on a box: natural extension intersected with the
/// mean-value form `p(c) + sum_d [dp/dx_d] [-r_d, r_d]`.
struct Encloser<'a> {
    p: &'a Polynomial,
    grad: Vec<Polynomial>,
}

impl<'a> Encloser<'a> {
    fn new(p: &'a Polynomial) -> Self {
        Encloser {
            p,
            grad: (0..p.n).map(|d| p.derivative(d)).collect(),
        }
    }

    fn upper_abs(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let n = self.p.n;
        let natural = self.p.enclose(lo, hi);
        let c: Vec<f64> = (0..n).map(|d| 0.5 * (lo[d] + hi[d])).collect();
        let pc = self.p.eval_unchecked(&c);
        let mut mv = Interval { lo: pc, hi: pc };
        for d in 0..n {
            let r = 0.5 * (hi[d] - lo[d]);
            mv = mv.add(self.grad[d].enclose(lo, hi).mul(Interval { lo: -r, hi: r }));
        }
        let bound = natural.intersect(mv).abs_max();
        // Covers rounding in the enclosure arithmetic.
        bound * (1.0 + 1e-12) + 1e-300
    }
}

/// Product lattice `{0..m}^n` of evaluation sites with a box per index block.
trait Lattice: Sync {
    fn n(&self) -> usize;
    fn per_axis(&self) -> u64;
    /// Box containing every site with index in `lo..hi` (exclusive).
    fn block_box(&self, lo: &[u64], hi: &[u64], bl: &mut [f64], bh: &mut [f64]);
    fn site(&self, idx: &[u64], p: &mut [f64]);
}

struct SampleLattice<'a> {
    cube: &'a Cube,
    q: u64,
    seed: u64,
}

impl Lattice for SampleLattice<'_> {
    fn n(&self) -> usize {
        self.cube.n()
    }

    fn per_axis(&self) -> u64 {
        self.q
    }

    fn block_box(&self, lo: &[u64], hi: &[u64], bl: &mut [f64], bh: &mut [f64]) {
        let h = self.cube.side() / self.q as f64;
        for d in 0..lo.len() {
            let base = self.cube.min_corner()[d];
            bl[d] = base + lo[d] as f64 * h;
            bh[d] = base + hi[d] as f64 * h;
        }
    }

    fn site(&self, idx: &[u64], p: &mut [f64]) {
        let flat = idx.iter().fold(0u64, |acc, &i| acc * self.q + i);
        subcube_sample_into(self.cube, self.q, self.seed, flat, idx, p);
    }
}

/// Regular lattice with `segments + 1` points per axis, corners included.
struct GridLattice<'a> {
    cube: &'a Cube,
    segments: u64,
}

impl GridLattice<'_> {
    #[inline]
    fn coord(&self, d: usize, i: u64) -> f64 {
        let base = self.cube.min_corner()[d];
        if i == self.segments {
            base + self.cube.side()
        } else {
            base + self.cube.side() * (i as f64 / self.segments as f64)
        }
    }
}

impl Lattice for GridLattice<'_> {
    fn n(&self) -> usize {
        self.cube.n()
    }

    fn per_axis(&self) -> u64 {
        self.segments + 1
    }

    fn block_box(&self, lo: &[u64], hi: &[u64], bl: &mut [f64], bh: &mut [f64]) {
        for d in 0..lo.len() {
            bl[d] = self.coord(d, lo[d]);
            bh[d] = self.coord(d, hi[d] - 1);
        }
    }

    fn site(&self, idx: &[u64], p: &mut [f64]) {
        for d in 0..idx.len() {
            p[d] = self.coord(d, idx[d]);
        }
    }
}

struct Block {
    bound: f64,
    lo: Vec<u64>,
    hi: Vec<u64>,
}

impl PartialEq for Block {
    fn eq(&self, o: &Self) -> bool {
        self.bound == o.bound
    }
}
impl Eq for Block {}
impl PartialOrd for Block {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Block {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.bound.total_cmp(&o.bound)
    }
}

/// Blocks with at most this many sites are evaluated exhaustively.
const LEAF_SITES: u64 = 32;

fn visit_block<L: Lattice + ?Sized>(p: &Polynomial, lattice: &L, lo: &[u64], hi: &[u64], best: &mut f64) {
    let n = lo.len();
    let mut idx = lo.to_vec();
    let mut x = vec![0.0; n];
    loop {
        lattice.site(&idx, &mut x);
        let v = p.eval_unchecked(&x).abs();
        if v > *best {
            *best = v;
        }
        let mut d = n;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < hi[d] {
                break;
            }
            idx[d] = lo[d];
        }
    }
}

/// `max |p|` over all lattice sites by best-first branch and bound.
fn lattice_max_abs<L: Lattice + ?Sized>(p: &Polynomial, lattice: &L) -> f64 {
    let n = lattice.n();
    // Every bound ties with the best value for constants, so nothing prunes.
    if p.dense.iter().skip(1).all(|&c| c == 0.0) {
        return p.dense[0].abs();
    }
    let enc = Encloser::new(p);
    let (mut bl, mut bh) = (vec![0.0; n], vec![0.0; n]);
    let mut bound_of = |lo: &[u64], hi: &[u64]| {
        lattice.block_box(lo, hi, &mut bl, &mut bh);
        enc.upper_abs(&bl, &bh)
    };
    let root_lo = vec![0; n];
    let root_hi = vec![lattice.per_axis(); n];
    let mut heap = BinaryHeap::new();
    heap.push(Block {
        bound: bound_of(&root_lo, &root_hi),
        lo: root_lo,
        hi: root_hi,
    });
    let mut best = 0.0f64;
    while let Some(block) = heap.pop() {
        if block.bound <= best {
            break;
        }
        let sites: u64 = block.lo.iter().zip(&block.hi).map(|(l, h)| h - l).product();
        if sites <= LEAF_SITES {
            visit_block(p, lattice, &block.lo, &block.hi, &mut best);
            continue;
        }
        let axis = (0..n).max_by_key(|&d| (block.hi[d] - block.lo[d], n - d)).expect("n >= 1");
        let mid = block.lo[axis] + (block.hi[axis] - block.lo[axis]) / 2;
        for (lo_a, hi_a) in [(block.lo[axis], mid), (mid, block.hi[axis])] {
            let mut lo = block.lo.clone();
            let mut hi = block.hi.clone();
            lo[axis] = lo_a;
            hi[axis] = hi_a;
            let bound = bound_of(&lo, &hi);
            if bound > best {
                heap.push(Block { bound, lo, hi });
            }
        }
    }
    best
}

/// `max_{y in Y} |p(y)|` for the sample set of
/// [`crate::geometry::select_one_per_subcube`] with the same arguments.
pub fn max_abs_on_samples(p: &Polynomial, cube: &Cube, q: u64, seed: u64) -> Result<f64> {
    check_dims(p, cube)?;
    cell_count(q, cube.n())?;
    Ok(lattice_max_abs(p, &SampleLattice { cube, q, seed }))
}

/// `max |p|` over the `(segments + 1)^n` lattice of the cube, corners included.
pub fn max_abs_on_grid(p: &Polynomial, cube: &Cube, segments: u64) -> Result<f64> {
    check_dims(p, cube)?;
    cell_count(segments + 1, cube.n())?;
    Ok(lattice_max_abs(p, &GridLattice { cube, segments }))
}

/// Reference scan of every sample point.
pub fn max_abs_on_samples_brute_force(p: &Polynomial, cube: &Cube, q: u64, seed: u64) -> Result<f64> {
    check_dims(p, cube)?;
    let mut best = 0.0f64;
    crate::geometry::for_each_subcube_sample(cube, q, seed, |y| best = best.max(p.eval_unchecked(y).abs()))?;
    Ok(best)
}

/// Reference scan of every lattice point.
pub fn max_abs_on_grid_brute_force(p: &Polynomial, cube: &Cube, segments: u64) -> Result<f64> {
    check_dims(p, cube)?;
    let n = cube.n();
    let count = cell_count(segments + 1, n)?;
    let grid = GridLattice { cube, segments };
    let mut x = vec![0.0; n];
    let mut best = 0.0f64;
    for i in 0..count {
        grid.site(&cell_multi_index(i, segments + 1, n), &mut x);
        best = best.max(p.eval_unchecked(&x).abs());
    }
    Ok(best)
}

fn check_dims(p: &Polynomial, cube: &Cube) -> Result<()> {
    if p.n == cube.n() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: cube.n(),
            got: p.n,
        })
    }
}

fn check_guard(n: usize, k: u32) -> Result<()> {
    if !(1..=MAX_DIMENSION).contains(&n) || k > MAX_DEGREE {
        return Err(Error::Range(format!(
            "trials are limited to 1 <= n <= {MAX_DIMENSION} and k <= {MAX_DEGREE}, got n = {n}, k = {k}"
        )));
    }
    Ok(())
}

/// Coefficients i.i.d. uniform on `[-1, 1]`, drawn in [`multi_indices`] order.
pub fn random_polynomial(n: usize, k: u32, seed: u64) -> Result<Polynomial> {
    check_guard(n, k)?;
    let mut rng = stream(seed);
    let coefficients = multi_indices(n, k)
        .into_iter()
        .map(|alpha| (alpha, uniform(&mut rng, -1.0, 1.0)))
        .collect();
    Polynomial::new(n, k, coefficients)
}

/// `q = gamma_n (k + 1)`.
pub fn minimal_q(n: usize, k: u32) -> Result<u64> {
    let g = gamma_n(n as u32)?;
    u64::try_from(g * (k as u128 + 1)).map_err(|_| Error::Range("q overflows u64".into()))
}

/// `ln` of the bound factor, `2 n gamma_n (k + 1)`.
pub fn log_bound(n: usize, k: u32) -> Result<f64> {
    Ok(2.0 * n as f64 * minimal_q(n, k)? as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub seed: u64,
    pub n: usize,
    pub k: u32,
    pub q: u64,
    /// Seed of the polynomial actually used (differs from the first draw
    /// only after a degenerate redraw).
    pub poly_seed: u64,
    pub redraws: u32,
    #[serde(serialize_with = "serialize_f64_17")]
    pub sup_q: f64,
    #[serde(serialize_with = "serialize_f64_17")]
    pub sup_grid: f64,
    #[serde(serialize_with = "serialize_f64_17")]
    pub max_y: f64,
    #[serde(serialize_with = "serialize_f64_17")]
    pub ratio: f64,
    #[serde(serialize_with = "serialize_f64_17")]
    pub log_bound: f64,
    pub pass: bool,
}

impl TrialReport {
    pub fn bound(&self) -> LogScalar {
        LogScalar::from_ln(self.log_bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub sup_segments: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            sup_segments: DEFAULT_SUP_SEGMENTS,
        }
    }
}

pub fn lemma1_trial(n: usize, k: u32, cube: &Cube, seed: u64) -> Result<TrialReport> {
    lemma1_trial_with(n, k, cube, seed, TrialConfig::default())
}

/// One trial: polynomial from `derive_seed(seed, 2 + r)` on redraw `r`,
/// samples from `derive_seed(seed, 1)`.
pub fn lemma1_trial_with(n: usize, k: u32, cube: &Cube, seed: u64, config: TrialConfig) -> Result<TrialReport> {
    check_guard(n, k)?;
    if cube.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: cube.n() });
    }
    if config.sup_segments < 49 {
        return Err(invalid("the supremum lattice needs at least 50 points per axis"));
    }
    let q = minimal_q(n, k)?;
    let y_seed = derive_seed(seed, 1);
    let log_bound = log_bound(n, k)?;
    for redraws in 0..MAX_REDRAWS {
        let poly_seed = derive_seed(seed, 2 + redraws as u64);
        let p = random_polynomial(n, k, poly_seed)?;
        let max_y = max_abs_on_samples(&p, cube, q, y_seed)?;
        if max_y == 0.0 {
            continue;
        }
        let sup_grid = max_abs_on_grid(&p, cube, config.sup_segments)?;
        let sup_q = sup_grid.max(max_y);
        let ratio = sup_q / max_y;
        return Ok(TrialReport {
            seed,
            n,
            k,
            q,
            poly_seed,
            redraws,
            sup_q,
            sup_grid,
            max_y,
            ratio,
            log_bound,
            pass: LogScalar::from_ln(ratio.ln()) <= LogScalar::from_ln(log_bound),
        });
    }
    Err(Error::Degenerate(format!(
        "polynomial vanished on every sample in {MAX_REDRAWS} draws (seed {seed})"
    )))
}

/// `trials` independent trials with seeds `derive_seed(base_seed, t)`, in
/// trial order regardless of scheduling.
pub fn run_trials(n: usize, k: u32, cube: &Cube, base_seed: u64, trials: usize, config: TrialConfig) -> Result<Vec<TrialReport>> {
    check_guard(n, k)?;
    (0..trials as u64)
        .into_par_iter()
        .map(|t| lemma1_trial_with(n, k, cube, derive_seed(base_seed, t), config))
        .collect()
}

pub const TRIAL_CSV_HEADER: [&str; 7] = ["seed", "n", "k", "q", "ratio", "log_bound", "pass"];

pub fn write_trials_csv<W: Write>(writer: W, trials: &[TrialReport]) -> Result<()> {
    let io = |e: csv::Error| Error::Resource(format!("csv write failed: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRIAL_CSV_HEADER).map_err(io)?;
    for t in trials {
        w.write_record([
            t.seed.to_string(),
            t.n.to_string(),
            t.k.to_string(),
            t.q.to_string(),
            fmt17(t.ratio),
            fmt17(t.log_bound),
            t.pass.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Resource(format!("csv write failed: {e}")))
}
