//! Inputs shared by the benchmarks under `benches/`.

use bessel_riesz::{Grid, GridFunction, Spacing};

/// Log-spaced cube `[0.05, 20]^dim` with `nodes` points per axis.
pub fn log_cube(nodes: usize, dim: usize) -> Grid {
    Grid::cube(Spacing::Logarithmic, 0.05, 20.0, nodes, dim).expect("valid grid")
}

/// Smooth bump centred at `(2, .., 2)`.
pub fn bump(grid: Grid) -> GridFunction {
    GridFunction::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| (v - 2.0).powi(2)).sum();
        (-r2).exp()
    })
}
