//! Axis-aligned cubes, subcube partitions, point-set generators, the
//! subcube-cover test and fill-distance brackets.
//!
//! Cells are half-open `[lo, hi)` along every axis except at the maximal face
//! of the enclosing cube, which is closed, so every point of the cube belongs
//! to exactly one cell. Multi-indices are enumerated in row-major order (last
//! axis fastest).

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::render::fmt17;
use crate::rng::{counter_unit, open_unit, stream, uniform};

/// Upper limit on any enumerated cell or grid-point count.
pub const CELL_GUARD: u64 = 100_000_000;

/// Point count above which nearest-point queries use a spatial hash.
pub const BRUTE_FORCE_LIMIT: usize = 10_000;

/// Relative slack absorbing rounding when `side / delta` is an integer.
const CEIL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    min_corner: Vec<f64>,
    side: f64,
}

impl Cube {
    pub fn new(min_corner: Vec<f64>, side: f64) -> Result<Self> {
        if min_corner.is_empty() {
            return Err(invalid("cube dimension must be at least 1"));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(invalid(format!("cube side must be positive and finite, got {side}")));
        }
        if min_corner.iter().any(|c| !c.is_finite()) {
            return Err(invalid("cube corner must be finite"));
        }
        Ok(Cube { min_corner, side })
    }

    /// `[0, 1]^n`.
    pub fn unit(n: usize) -> Result<Self> {
        Cube::new(vec![0.0; n], 1.0)
    }

    pub fn n(&self) -> usize {
        self.min_corner.len()
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn min_corner(&self) -> &[f64] {
        &self.min_corner
    }

    pub fn max_corner(&self) -> Vec<f64> {
        self.min_corner.iter().map(|c| c + self.side).collect()
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.n() as i32)
    }

    /// Closed-cube membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n()
            && x
                .iter()
                .zip(&self.min_corner)
                .all(|(&xi, &lo)| xi >= lo && xi <= lo + self.side)
    }

    /// The `2^n` vertices, ordered by the binary expansion of their index.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|d| {
                        let lo = self.min_corner[d];
                        if mask >> (n - 1 - d) & 1 == 1 {
                            lo + self.side
                        } else {
                            lo
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.n() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.n(),
                got,
            })
        }
    }
}

/// Finite list of points of a common dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    n: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("point dimension must be at least 1"));
        }
        Ok(PointSet { n, coords: Vec::new() })
    }

    /// Takes ownership of `coords`, whose length must be a multiple of `n`.
    pub fn from_flat(n: usize, coords: Vec<f64>) -> Result<Self> {
        if n == 0 || !coords.len().is_multiple_of(n) {
            return Err(invalid(format!(
                "{} coordinates do not form points of dimension {n}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point coordinates must be finite"));
        }
        Ok(PointSet { n, coords })
    }

    pub fn from_points<P: AsRef<[f64]>>(n: usize, points: &[P]) -> Result<Self> {
        let mut set = PointSet::new(n)?;
        for p in points {
            set.push(p.as_ref())?;
        }
        Ok(set)
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: p.len(),
            });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point coordinates must be finite"));
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.n)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }
}

/// `q^n`, or a resource error when it exceeds [`CELL_GUARD`].
pub fn cell_count(q: u64, n: usize) -> Result<u64> {
    if q == 0 {
        return Err(invalid("subdivision count must be positive"));
    }
    u32::try_from(n)
        .ok()
        .and_then(|n| q.checked_pow(n))
        .filter(|&c| c <= CELL_GUARD)
        .ok_or_else(|| Error::Resource(format!("{q}^{n} cells exceed the guard of {CELL_GUARD}")))
}

/// Row-major multi-index of flat cell `index` on a `q^n` grid.
pub fn cell_multi_index(index: u64, q: u64, n: usize) -> Vec<u64> {
    let mut idx = vec![0; n];
    let mut rest = index;
    for d in (0..n).rev() {
        idx[d] = rest % q;
        rest /= q;
    }
    idx
}

fn subcube_at(cube: &Cube, q: u64, idx: &[u64]) -> Cube {
    let h = cube.side / q as f64;
    let min_corner = idx
        .iter()
        .zip(&cube.min_corner)
        .map(|(&j, &lo)| lo + j as f64 * h)
        .collect();
    Cube { min_corner, side: h }
}

/// The `q^n` congruent subcubes of `cube` in row-major order.
pub fn subdivide(cube: &Cube, q: u64) -> Result<Vec<Cube>> {
    let count = cell_count(q, cube.n())?;
    Ok((0..count)
        .map(|i| subcube_at(cube, q, &cell_multi_index(i, q, cube.n())))
        .collect())
}

/// Writes into `p` the sample point of the cell with multi-index `idx` on the
/// `q^n` partition. Coordinate `d` of cell `flat` is drawn from the counter
/// `flat * n + d` of `seed`, so any cell can be sampled independently.
#[inline]
pub fn subcube_sample_into(cube: &Cube, q: u64, seed: u64, flat: u64, idx: &[u64], p: &mut [f64]) {
    let n = cube.n();
    let h = cube.side / q as f64;
    for d in 0..n {
        let u = counter_unit(seed, flat * n as u64 + d as u64);
        p[d] = cube.min_corner[d] + (idx[d] as f64 + u) * h;
    }
}

/// Streams one uniform point from the interior of every subcube, in
/// row-major order, without materializing the set.
pub fn for_each_subcube_sample<F: FnMut(&[f64])>(cube: &Cube, q: u64, seed: u64, mut f: F) -> Result<()> {
    let n = cube.n();
    let count = cell_count(q, n)?;
    let mut idx = vec![0u64; n];
    let mut p = vec![0.0; n];
    for flat in 0..count {
        subcube_sample_into(cube, q, seed, flat, &idx, &mut p);
        f(&p);
        for d in (0..n).rev() {
            idx[d] += 1;
            if idx[d] < q {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(())
}

/// One uniform point strictly inside each of the `q^n` subcubes.
pub fn select_one_per_subcube(cube: &Cube, q: u64, seed: u64) -> Result<PointSet> {
    let n = cube.n();
    let count = cell_count(q, n)?;
    let mut coords = Vec::with_capacity(count as usize * n);
    for_each_subcube_sample(cube, q, seed, |p| coords.extend_from_slice(p))?;
    Ok(PointSet { n, coords })
}

/// Cells per axis used for spacing `delta`: `ceil(side / delta)`, so every
/// cell has side at most `delta`.
pub fn cells_per_axis(side: f64, delta: f64) -> Result<u64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("spacing must be positive and finite, got {delta}")));
    }
    if delta > side * (1.0 + CEIL_SLACK) {
        return Err(invalid(format!("spacing {delta} exceeds the cube side {side}")));
    }
    let m = (side / delta * (1.0 - CEIL_SLACK)).ceil().max(1.0);
    if m > CELL_GUARD as f64 {
        return Err(Error::Resource(format!("{m} cells per axis exceed the guard")));
    }
    Ok(m as u64)
}

/// Index of the half-open cell containing coordinate `x`, or `None` outside.
#[inline]
fn axis_cell(x: f64, lo: f64, side: f64, m: u64) -> Option<u64> {
    if !(x >= lo && x <= lo + side) {
        return None;
    }
    let j = ((x - lo) / side * m as f64).floor() as u64;
    Some(j.min(m - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverReport {
    pub pass: bool,
    pub cells_per_axis: u64,
    pub cell_side: f64,
    pub empty_cells: u64,
    /// First empty cell in row-major order.
    pub witness: Option<CellWitness>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellWitness {
    pub flat_index: u64,
    pub multi_index: Vec<u64>,
    pub cell: Cube,
}

/// Checks that every cell of the `ceil(side/delta)^n` partition of `cube`
/// contains a point of `points`. Points outside the cube are ignored.
pub fn cover_check(cube: &Cube, points: &PointSet, delta: f64) -> Result<CoverReport> {
    cube.check_dim(points.n())?;
    let n = cube.n();
    let m = cells_per_axis(cube.side, delta)?;
    let count = cell_count(m, n)?;
    let mut occupied = vec![false; count as usize];
    'points: for p in points.iter() {
        let mut flat = 0u64;
        for d in 0..n {
            match axis_cell(p[d], cube.min_corner[d], cube.side, m) {
                Some(j) => flat = flat * m + j,
                None => continue 'points,
            }
        }
        occupied[flat as usize] = true;
    }
    let empty_cells = occupied.iter().filter(|&&o| !o).count() as u64;
    let witness = occupied.iter().position(|&o| !o).map(|i| {
        let multi_index = cell_multi_index(i as u64, m, n);
        let cell = subcube_at(cube, m, &multi_index);
        CellWitness {
            flat_index: i as u64,
            multi_index,
            cell,
        }
    });
    Ok(CoverReport {
        pass: witness.is_none(),
        cells_per_axis: m,
        cell_side: cube.side / m as f64,
        empty_cells,
        witness,
    })
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact nearest-point distance queries over a fixed point set.
///
/// Both strategies evaluate the same squared distances and take their
/// minimum, so they return bit-identical results.
#[derive(Debug, Clone)]
pub enum NearestIndex<'a> {
    BruteForce(&'a PointSet),
    Hashed(SpatialHash<'a>),
}

impl<'a> NearestIndex<'a> {
    /// Brute force up to [`BRUTE_FORCE_LIMIT`] points, spatial hash above.
    pub fn build(points: &'a PointSet) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("nearest-point index needs at least one point"));
        }
        if points.len() <= BRUTE_FORCE_LIMIT {
            Ok(NearestIndex::BruteForce(points))
        } else {
            Ok(NearestIndex::Hashed(SpatialHash::new(points)?))
        }
    }

    pub fn distance(&self, y: &[f64]) -> f64 {
        match self {
            NearestIndex::BruteForce(points) => brute_force_distance(points, y),
            NearestIndex::Hashed(hash) => hash.distance(y),
        }
    }
}

pub fn brute_force_distance(points: &PointSet, y: &[f64]) -> f64 {
    points
        .iter()
        .map(|p| dist2(p, y))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Uniform bucket grid over the bounding box of a point set.
#[derive(Debug, Clone)]
pub struct SpatialHash<'a> {
    points: &'a PointSet,
    lo: Vec<f64>,
    bucket: f64,
    dims: Vec<usize>,
    /// Bucket `b` holds `order[start[b]..start[b + 1]]`.
    start: Vec<usize>,
    order: Vec<usize>,
}

impl<'a> SpatialHash<'a> {
    pub fn new(points: &'a PointSet) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("spatial hash needs at least one point"));
        }
        let n = points.n();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in points.iter() {
            for d in 0..n {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let extent = (0..n).map(|d| hi[d] - lo[d]).fold(0.0, f64::max);
        // About one point per bucket along the widest axis.
        let per_axis = (points.len() as f64).powf(1.0 / n as f64).ceil().max(1.0);
        let bucket = if extent > 0.0 { extent / per_axis } else { 1.0 };
        let dims: Vec<usize> = (0..n)
            .map(|d| ((hi[d] - lo[d]) / bucket).floor() as usize + 1)
            .collect();
        let total = dims.iter().try_fold(1usize, |acc, &k| acc.checked_mul(k));
        let total = match total {
            Some(t) if t as u64 <= CELL_GUARD => t,
            _ => return Err(Error::Resource("spatial hash bucket count exceeds the guard".into())),
        };
        let mut hash = SpatialHash {
            points,
            lo,
            bucket,
            dims,
            start: vec![0; total + 1],
            order: vec![0; points.len()],
        };
        let keys: Vec<usize> = points.iter().map(|p| hash.flat(&hash.cell_of(p))).collect();
        for &k in &keys {
            hash.start[k + 1] += 1;
        }
        for b in 0..total {
            hash.start[b + 1] += hash.start[b];
        }
        let mut fill = hash.start.clone();
        for (i, &k) in keys.iter().enumerate() {
            hash.order[fill[k]] = i;
            fill[k] += 1;
        }
        Ok(hash)
    }

    fn cell_of(&self, y: &[f64]) -> Vec<usize> {
        (0..y.len())
            .map(|d| {
                let t = ((y[d] - self.lo[d]) / self.bucket).floor();
                t.clamp(0.0, (self.dims[d] - 1) as f64) as usize
            })
            .collect()
    }

    fn flat(&self, cell: &[usize]) -> usize {
        cell.iter().zip(&self.dims).fold(0, |acc, (&c, &k)| acc * k + c)
    }

    pub fn distance(&self, y: &[f64]) -> f64 {
        let n = y.len();
        let center = self.cell_of(y);
        let max_ring = self.dims.iter().copied().max().unwrap_or(1);
        let mut best = f64::INFINITY;
        let mut cell = vec![0usize; n];
        for r in 0..=max_ring {
            // Every bucket at Chebyshev ring >= r + 1 lies at least r buckets away.
            self.visit_ring(&center, r, &mut cell, 0, false, &mut |b| {
                for &i in &self.order[self.start[b]..self.start[b + 1]] {
                    best = best.min(dist2(self.points.point(i), y));
                }
            });
            let reach = r as f64 * self.bucket;
            if best.is_finite() && best.sqrt() <= reach {
                break;
            }
        }
        best.sqrt()
    }

    fn visit_ring<F: FnMut(usize)>(
        &self,
        center: &[usize],
        r: usize,
        cell: &mut Vec<usize>,
        d: usize,
        on_shell: bool,
        f: &mut F,
    ) {
        let n = center.len();
        if d == n {
            if on_shell || r == 0 {
                f(self.flat(cell));
            }
            return;
        }
        let lo = center[d].saturating_sub(r);
        let hi = (center[d] + r).min(self.dims[d] - 1);
        for c in lo..=hi {
            cell[d] = c;
            let shell = on_shell || c.abs_diff(center[d]) == r;
            self.visit_ring(center, r, cell, d + 1, shell, f);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillDistance {
    pub lower: f64,
    pub upper: f64,
    pub resolution: u64,
}

/// Bracket `[lower, upper]` on `sup_{y in cube} min_{x in points} |y - x|`.
///
/// `lower` is the maximum over the `resolution^n` cell centers; every point
/// of the cube lies within `(sqrt(n)/2) side/resolution` of a center.
pub fn fill_distance(cube: &Cube, points: &PointSet, resolution: u64) -> Result<FillDistance> {
    cube.check_dim(points.n())?;
    if points.is_empty() {
        return Err(invalid("fill distance of an empty point set"));
    }
    let index = NearestIndex::build(points)?;
    fill_distance_with(cube, &index, resolution)
}

pub fn fill_distance_with(cube: &Cube, index: &NearestIndex<'_>, resolution: u64) -> Result<FillDistance> {
    let n = cube.n();
    let count = cell_count(resolution, n)?;
    let h = cube.side / resolution as f64;
    let lower = (0..count)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |y, i| {
                let idx = cell_multi_index(i, resolution, n);
                for d in 0..n {
                    y[d] = cube.min_corner[d] + (idx[d] as f64 + 0.5) * h;
                }
                index.distance(y)
            },
        )
        .reduce(|| 0.0, f64::max);
    let slack = 0.5 * (n as f64).sqrt() * h;
    let upper = (lower + slack) * (1.0 + 1e-12);
    Ok(FillDistance {
        lower,
        upper,
        resolution,
    })
}

fn grid_centers(cube: &Cube, spacing: f64) -> Result<(u64, f64, u64)> {
    let m = cells_per_axis(cube.side, spacing)?;
    let count = cell_count(m, cube.n())?;
    Ok((m, cube.side / m as f64, count))
}

/// Centers of the `ceil(side/spacing)^n` cells.
pub fn regular_grid(cube: &Cube, spacing: f64) -> Result<PointSet> {
    let n = cube.n();
    let (m, h, count) = grid_centers(cube, spacing)?;
    let mut coords = Vec::with_capacity(count as usize * n);
    for i in 0..count {
        let idx = cell_multi_index(i, m, n);
        coords.extend((0..n).map(|d| cube.min_corner[d] + (idx[d] as f64 + 0.5) * h));
    }
    Ok(PointSet { n, coords })
}

/// Cell centers displaced uniformly by up to a quarter cell per axis, so every
/// cell keeps its point and distinct points stay at least half a cell apart.
pub fn jittered_grid(cube: &Cube, spacing: f64, seed: u64) -> Result<PointSet> {
    let n = cube.n();
    let (m, h, count) = grid_centers(cube, spacing)?;
    let mut rng = stream(seed);
    let mut coords = Vec::with_capacity(count as usize * n);
    for i in 0..count {
        let idx = cell_multi_index(i, m, n);
        for d in 0..n {
            let offset = 0.5 * (open_unit(&mut rng) - 0.5);
            coords.push(cube.min_corner[d] + (idx[d] as f64 + 0.5 + offset) * h);
        }
    }
    Ok(PointSet { n, coords })
}

/// `count` independent uniform points in the cube.
pub fn uniform_random(cube: &Cube, count: usize, seed: u64) -> Result<PointSet> {
    let n = cube.n();
    if count as u64 > CELL_GUARD {
        return Err(Error::Resource(format!("{count} points exceed the guard")));
    }
    let mut rng = stream(seed);
    let mut coords = Vec::with_capacity(count * n);
    for _ in 0..count {
        for d in 0..n {
            let lo = cube.min_corner[d];
            coords.push(uniform(&mut rng, lo, lo + cube.side));
        }
    }
    Ok(PointSet { n, coords })
}

/// One point per row, no header, 17 significant digits.
pub fn write_points_csv<W: Write>(writer: W, points: &PointSet) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for p in points.iter() {
        w.write_record(p.iter().map(|&x| fmt17(x)))
            .map_err(|e| Error::Resource(format!("csv write failed: {e}")))?;
    }
    w.flush().map_err(|e| Error::Resource(format!("csv write failed: {e}")))
}

/// Inverse of [`write_points_csv`]. Blank lines are skipped; every row must
/// have the same number of finite columns.
pub fn read_points_csv<R: Read>(reader: R) -> Result<PointSet> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut set: Option<PointSet> = None;
    for record in r.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row = parse_row(&record, line)?;
        let set = set.get_or_insert(PointSet::new(row.len()).map_err(|_| Error::Parse {
            line,
            message: "empty row".into(),
        })?);
        if row.len() != set.n() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} columns, found {}", set.n(), row.len()),
            });
        }
        set.coords.extend(row);
    }
    set.ok_or(Error::Parse {
        line: 0,
        message: "no points".into(),
    })
}

pub(crate) fn parse_row(record: &csv::StringRecord, line: u64) -> Result<Vec<f64>> {
    record
        .iter()
        .enumerate()
        .map(|(col, field)| {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {}: `{field}` is not a number", col + 1),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Parse {
                    line,
                    message: format!("column {}: non-finite value", col + 1),
                })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn interval(lo: f64, side: f64) -> Cube {
        Cube::new(vec![lo], side).unwrap()
    }

    #[test]
    fn cube_validation() {
        assert!(Cube::new(vec![], 1.0).is_err());
        assert!(Cube::new(vec![0.0], 0.0).is_err());
        assert!(Cube::new(vec![f64::NAN], 1.0).is_err());
        assert_eq!(Cube::unit(3).unwrap().corners().len(), 8);
    }

    #[test]
    fn subdivide_examples() {
        let sq = subdivide(&Cube::unit(2).unwrap(), 2).unwrap();
        assert_eq!(sq.len(), 4);
        assert!(sq.iter().all(|c| c.side() == 0.5));
        assert_eq!(sq[1].min_corner(), &[0.0, 0.5]);
        assert_eq!(sq[2].min_corner(), &[0.5, 0.0]);

        let cubes = subdivide(&Cube::unit(3).unwrap(), 3).unwrap();
        assert_eq!(cubes.len(), 27);
        let vol: f64 = cubes.iter().map(Cube::volume).sum();
        assert!((vol - 1.0).abs() < 1e-14);

        let breaks: Vec<f64> = subdivide(&interval(0.0, 2.0), 4)
            .unwrap()
            .iter()
            .map(|c| c.min_corner()[0])
            .collect();
        assert_eq!(breaks, vec![0.0, 0.5, 1.0, 1.5]);
    }

    #[test]
    fn subdivide_guard() {
        assert!(matches!(subdivide(&Cube::unit(3).unwrap(), 1000), Err(Error::Resource(_))));
        assert!(matches!(cell_count(10, 9), Err(Error::Resource(_))));
        assert!(cell_count(10, 8).is_ok());
        assert!(subdivide(&Cube::unit(1).unwrap(), 0).is_err());
    }

    #[test]
    fn select_one_per_subcube_examples() {
        let y = select_one_per_subcube(&interval(0.0, 1.0), 2, 5).unwrap();
        assert_eq!(y.len(), 2);
        assert!(y.point(0)[0] > 0.0 && y.point(0)[0] < 0.5);
        assert!(y.point(1)[0] > 0.5 && y.point(1)[0] < 1.0);
        assert_eq!(y, select_one_per_subcube(&interval(0.0, 1.0), 2, 5).unwrap());
        assert_ne!(y, select_one_per_subcube(&interval(0.0, 1.0), 2, 6).unwrap());

        let q = crate::constants::gamma_n(2).unwrap() as u64 * 2;
        let sq = Cube::unit(2).unwrap();
        let y = select_one_per_subcube(&sq, q, 11).unwrap();
        assert_eq!(y.len(), 576);
        for (i, cell) in subdivide(&sq, q).unwrap().iter().enumerate() {
            let p = y.point(i);
            for d in 0..2 {
                assert!(p[d] > cell.min_corner()[d] && p[d] < cell.min_corner()[d] + cell.side());
            }
        }
    }

    #[test]
    fn streaming_sampler_matches_materialized_set() {
        let cube = Cube::new(vec![-1.0, 2.0, 0.5], 3.0).unwrap();
        let y = select_one_per_subcube(&cube, 5, 99).unwrap();
        let mut streamed = Vec::new();
        for_each_subcube_sample(&cube, 5, 99, |p| streamed.extend_from_slice(p)).unwrap();
        assert_eq!(streamed, y.as_flat());
    }

    #[test]
    fn cover_check_examples() {
        let unit = interval(0.0, 1.0);
        let two = PointSet::from_points(1, &[[0.25], [0.75]]).unwrap();
        assert!(cover_check(&unit, &two, 0.5).unwrap().pass);

        let one = PointSet::from_points(1, &[[0.25]]).unwrap();
        let r = cover_check(&unit, &one, 0.5).unwrap();
        assert!(!r.pass);
        let w = r.witness.unwrap();
        assert_eq!(w.flat_index, 1);
        assert_eq!(w.cell.min_corner(), &[0.5]);
        assert_eq!(w.cell.side(), 0.5);

        let sq = Cube::unit(2).unwrap();
        let grid = regular_grid(&sq, 0.1).unwrap();
        assert_eq!(grid.len(), 100);
        let r = cover_check(&sq, &grid, 0.1).unwrap();
        assert!(r.pass);
        assert_eq!(r.cells_per_axis, 10);
    }

    #[test]
    fn cover_check_boundaries() {
        let unit = interval(0.0, 1.0);
        // The max face belongs to the last cell; a point on a shared face
        // belongs to the upper cell.
        let pts = PointSet::from_points(1, &[[0.5], [1.0]]).unwrap();
        let r = cover_check(&unit, &pts, 0.5).unwrap();
        assert!(!r.pass);
        assert_eq!(r.witness.unwrap().flat_index, 0);
        let pts = PointSet::from_points(1, &[[0.0], [0.5]]).unwrap();
        assert!(cover_check(&unit, &pts, 0.5).unwrap().pass);
        // Non-dividing spacing shrinks the cells.
        assert_eq!(cover_check(&unit, &pts, 0.3).unwrap().cells_per_axis, 4);
        assert!(cover_check(&unit, &pts, 1.5).is_err());
        assert!(cover_check(&unit, &pts, 0.0).is_err());
        let outside = PointSet::from_points(1, &[[2.0]]).unwrap();
        assert_eq!(cover_check(&unit, &outside, 1.0).unwrap().empty_cells, 1);
        let wrong_dim = PointSet::from_points(2, &[[0.0, 0.0]]).unwrap();
        assert!(matches!(cover_check(&unit, &wrong_dim, 0.5), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn regular_grid_example() {
        let g = regular_grid(&interval(0.0, 1.0), 0.25).unwrap();
        assert_eq!(g.as_flat(), &[0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn jittered_grid_covers_for_many_seeds() {
        let sq = Cube::new(vec![-0.5, 1.0], 2.0).unwrap();
        for seed in 0..1000 {
            let g = jittered_grid(&sq, 0.3, seed).unwrap();
            assert!(cover_check(&sq, &g, 0.3).unwrap().pass, "seed {seed}");
        }
    }

    #[test]
    fn fill_distance_examples() {
        let unit = interval(0.0, 1.0);
        let mid = PointSet::from_points(1, &[[0.5]]).unwrap();
        let fd = fill_distance(&unit, &mid, 1000).unwrap();
        assert!(fd.lower <= 0.5 && 0.5 <= fd.upper);
        assert!(fd.upper - fd.lower <= 5e-4 + 1e-12);

        let ends = PointSet::from_points(1, &[[0.0], [1.0]]).unwrap();
        let fd = fill_distance(&unit, &ends, 1000).unwrap();
        assert!(fd.lower <= 0.5 && 0.5 <= fd.upper);

        let sq = Cube::unit(2).unwrap();
        let corners = PointSet::from_points(2, &sq.corners()).unwrap();
        let fd = fill_distance(&sq, &corners, 200).unwrap();
        let exact = 0.5f64.sqrt();
        assert!(fd.lower <= exact && exact <= fd.upper, "{fd:?}");
        assert!(fd.upper - fd.lower < 5e-3);

        assert!(fill_distance(&unit, &PointSet::new(1).unwrap(), 10).is_err());
    }

    #[test]
    fn regular_grid_fill_distance_is_half_diagonal() {
        for n in 1..=3 {
            let cube = Cube::unit(n).unwrap();
            let s = 0.25;
            let g = regular_grid(&cube, s).unwrap();
            let fd = fill_distance(&cube, &g, 40).unwrap();
            let half_diag = 0.5 * (n as f64).sqrt() * s;
            assert!(fd.lower <= half_diag + 1e-12);
            assert!(fd.upper >= half_diag);
        }
    }

    /// `fill distance = max over Voronoi vertices in the cube`; for a box the
    /// maximizer is among corners and points equidistant to subsets of X, so
    /// on tiny 1-D sets it is a corner or a midpoint of consecutive points.
    fn exact_fill_1d(lo: f64, side: f64, xs: &[f64]) -> f64 {
        let mut candidates = vec![lo, lo + side];
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        for w in sorted.windows(2) {
            let m = 0.5 * (w[0] + w[1]);
            if m >= lo && m <= lo + side {
                candidates.push(m);
            }
        }
        candidates
            .iter()
            .map(|&c| xs.iter().map(|x| (x - c).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }

    #[test]
    fn spatial_hash_matches_brute_force() {
        for (n, count) in [(1usize, 20_000usize), (2, 15_000), (3, 12_000)] {
            let cube = Cube::unit(n).unwrap();
            let pts = uniform_random(&cube, count, n as u64).unwrap();
            let brute = NearestIndex::BruteForce(&pts);
            let hashed = NearestIndex::Hashed(SpatialHash::new(&pts).unwrap());
            let probe = Cube::new(vec![-0.5; n], 2.0).unwrap();
            let queries = uniform_random(&probe, 300, 77).unwrap();
            for y in queries.iter() {
                assert_eq!(brute.distance(y).to_bits(), hashed.distance(y).to_bits());
            }
            assert!(matches!(NearestIndex::build(&pts).unwrap(), NearestIndex::Hashed(_)));
        }
    }

    #[test]
    fn spatial_hash_handles_degenerate_sets() {
        let same = PointSet::from_points(2, &[[0.3, 0.3]; 5]).unwrap();
        let h = SpatialHash::new(&same).unwrap();
        assert_eq!(h.distance(&[0.3, 0.7]), brute_force_distance(&same, &[0.3, 0.7]));
        let line = PointSet::from_flat(2, (0..200).flat_map(|i| [i as f64 * 0.01, 0.0]).collect()).unwrap();
        let h = SpatialHash::new(&line).unwrap();
        for y in [[0.555, 0.2], [-3.0, 4.0], [1.5, -0.01]] {
            assert_eq!(h.distance(&y).to_bits(), brute_force_distance(&line, &y).to_bits());
        }
    }

    #[test]
    fn csv_round_trip() {
        let pts = uniform_random(&Cube::unit(3).unwrap(), 17, 3).unwrap();
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert_eq!(read_points_csv(buf.as_slice()).unwrap(), pts);
    }

    #[test]
    fn csv_parse_errors_carry_line_numbers() {
        let err = read_points_csv("0.1,0.2\n0.3,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = read_points_csv("0.1,0.2\n0.5,0.5\n0.3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        assert!(read_points_csv("".as_bytes()).is_err());
        assert!(matches!(read_points_csv("1,inf\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    proptest! {
        #[test]
        fn fill_bracket_contains_exact_1d(xs in proptest::collection::vec(-0.2f64..1.2, 1..10)) {
            let unit = interval(0.0, 1.0);
            let pts = PointSet::from_flat(1, xs.clone()).unwrap();
            let fd = fill_distance(&unit, &pts, 512).unwrap();
            let exact = exact_fill_1d(0.0, 1.0, &xs);
            prop_assert!(fd.lower <= exact + 1e-15 && exact <= fd.upper, "{:?} vs {}", fd, exact);
        }

        #[test]
        fn fill_bracket_contains_dense_oracle_2d(
            xs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..10)
        ) {
            let sq = Cube::unit(2).unwrap();
            let pts = PointSet::from_points(2, &xs.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>()).unwrap();
            let fd = fill_distance(&sq, &pts, 64).unwrap();
            // Candidate maximizers: corners, and circumcenters / edge
            // projections of point pairs and triples, clipped to the square.
            let mut best: f64 = 0.0;
            let mut consider = |c: [f64; 2]| {
                if c[0] >= 0.0 && c[0] <= 1.0 && c[1] >= 0.0 && c[1] <= 1.0 {
                    best = best.max(brute_force_distance(&pts, &c));
                }
            };
            for c in sq.corners() {
                consider([c[0], c[1]]);
            }
            let p: Vec<[f64; 2]> = xs.iter().map(|&(a, b)| [a, b]).collect();
            for i in 0..p.len() {
                for j in i + 1..p.len() {
                    // Bisector of p_i p_j meets each edge of the square.
                    let (a, b) = (p[i], p[j]);
                    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                    let rhs = 0.5 * (b[0] * b[0] - a[0] * a[0] + b[1] * b[1] - a[1] * a[1]);
                    for edge in [0.0, 1.0] {
                        if dy != 0.0 { consider([edge, (rhs - dx * edge) / dy]); }
                        if dx != 0.0 { consider([(rhs - dy * edge) / dx, edge]); }
                    }
                    for k in j + 1..p.len() {
                        let c = p[k];
                        let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
                        if d.abs() > 1e-12 {
                            let a2 = a[0] * a[0] + a[1] * a[1];
                            let b2 = b[0] * b[0] + b[1] * b[1];
                            let c2 = c[0] * c[0] + c[1] * c[1];
                            let ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
                            let uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
                            consider([ux, uy]);
                        }
                    }
                }
            }
            prop_assert!(fd.lower <= best + 1e-12 && best <= fd.upper + 1e-12, "{:?} vs {}", fd, best);
        }

        #[test]
        fn cover_pass_bounds_fill_distance(seed in 0u64..1000, delta in 0.05f64..0.5) {
            let sq = Cube::unit(2).unwrap();
            let pts = jittered_grid(&sq, delta, seed).unwrap();
            let cover = cover_check(&sq, &pts, delta).unwrap();
            prop_assert!(cover.pass);
            let fd = fill_distance(&sq, &pts, 64).unwrap();
            prop_assert!(fd.upper <= 2f64.sqrt() * delta);
        }

        #[test]
        fn any_cover_pass_bounds_sampled_fill_distance(seed in 0u64..1000, count in 10usize..200, delta in 0.1f64..0.6) {
            let sq = Cube::unit(2).unwrap();
            let pts = uniform_random(&sq, count, seed).unwrap();
            if cover_check(&sq, &pts, delta).unwrap().pass {
                prop_assert!(fill_distance(&sq, &pts, 64).unwrap().lower <= 2f64.sqrt() * delta);
            }
        }

        #[test]
        fn twice_fill_distance_covers(seed in 0u64..1000, count in 5usize..60) {
            let sq = Cube::unit(2).unwrap();
            let pts = uniform_random(&sq, count, seed).unwrap();
            let fd = fill_distance(&sq, &pts, 128).unwrap();
            // Cells of side strictly above 2d each contain a closed ball of
            // radius d, hence a point; choose a spacing that divides the side.
            let k = (1.0 / (2.0 * fd.upper + 1e-9)).floor();
            prop_assume!(k >= 1.0);
            prop_assert!(cover_check(&sq, &pts, 1.0 / k).unwrap().pass);
        }
    }
}
