//! Criterion benchmarks for `gaussbound-core`; see `benches/`.

use gaussbound_core::geometry::{jittered_grid, Cube, PointSet};
use gaussbound_core::Result;

/// Jittered grid on the unit cube used by several benchmarks.
pub fn unit_grid(n: usize, delta: f64, seed: u64) -> Result<(Cube, PointSet)> {
    let cube = Cube::unit(n)?;
    let points = jittered_grid(&cube, delta, seed)?;
    Ok((cube, points))
}
