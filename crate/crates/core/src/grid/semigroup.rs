//! Heat semigroup and maximal function on grids.
//!
//! Kernels are applied axis by axis: the product structure of the kernel
//! makes `e^{-tΔ_ν}` a tensor product of 1-D integral operators. Each 1-D
//! operator is a dense matrix built row by row. A row uses the grid weights
//! directly when the kernel width `√t` is at least the local node spacing,
//! and otherwise integrates the kernel against the piecewise-linear
//! interpolant of the data (product integration), which stays accurate when
//! the kernel is narrower than a cell.

use std::sync::OnceLock;

use rayon::prelude::*;

use super::{Axis, Grid, GridFunction, Spacing};
use crate::error::{domain, Error, Result};
use crate::heat::{reduced_unchecked, NuVector};
use crate::quad::gauss_legendre;

/// Entries with `(x-y)²/4t` above this are dropped.
pub(crate) const GAUSS_CUT: f64 = 46.0;
/// Rows switch to product integration when `√t` falls below this many cells.
const TRAPEZOID_MIN_WIDTH: f64 = 1.0;
const PANEL_ORDER: usize = 6;

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

/// Dense `n × n` operator on one axis, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl AxisMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j];
            }
        }
        Self { n, data }
    }

    /// `self + c · other`.
    pub fn axpy(&mut self, c: f64, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }
}

/// Matrix of `f ↦ ∫ K_t(x_i, y) f(y) dy` on one axis, where
/// `K_t(x, y) = reduced(x, y) · exp(-(x-y)²/4t)`.
pub fn kernel_matrix<K>(axis: &Axis, t: f64, reduced: K) -> AxisMatrix
where
    K: Fn(f64, f64) -> f64 + Sync,
{
    let n = axis.len();
    let mut data = vec![0.0; n * n];
    let half_width = (4.0 * t * GAUSS_CUT).sqrt();
    let sqrt_t = t.sqrt();
    let (gl_x, gl_w) = panel_rule();
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let x = axis.nodes[i];
        let (a, b) = (x - half_width, x + half_width);
        let full = |y: f64| reduced(x, y) * (-(x - y) * (x - y) / (4.0 * t)).exp();
        if sqrt_t >= TRAPEZOID_MIN_WIDTH * axis.max_spacing_in(a, b) {
            let j0 = axis.nodes.partition_point(|&v| v < a);
            let j1 = axis.nodes.partition_point(|&v| v <= b);
            for (j, r) in row.iter_mut().enumerate().take(j1).skip(j0) {
                *r = axis.weights[j] * full(axis.nodes[j]);
            }
            return;
        }
        let (c0, c1) = axis.cell_range(a, b);
        for c in c0..c1 {
            let (ya, yb) = (axis.nodes[c], axis.nodes[c + 1]);
            let lo = ya.max(a);
            let hi = yb.min(b);
            if hi <= lo {
                continue;
            }
            let (sa, sb) = (axis.coord(ya), axis.coord(yb));
            let (slo, shi) = (axis.coord(lo), axis.coord(hi));
            let panels = ((hi - lo) / (0.5 * sqrt_t)).ceil().clamp(1.0, 400.0) as usize;
            let ph = (shi - slo) / panels as f64;
            let (mut left, mut right) = (0.0, 0.0);
            for p in 0..panels {
                let mid = slo + (p as f64 + 0.5) * ph;
                for (gx, gw) in gl_x.iter().zip(gl_w) {
                    let s = mid + 0.5 * ph * gx;
                    let y = axis.point(s);
                    let jac = match axis.spacing {
                        Spacing::Uniform => 1.0,
                        Spacing::Logarithmic => y,
                    };
                    let theta = (s - sa) / (sb - sa);
                    let v = 0.5 * ph * gw * jac * full(y);
                    left += v * (1.0 - theta);
                    right += v * theta;
                }
            }
            row[c] += left;
            row[c + 1] += right;
        }
    });
    AxisMatrix { n, data }
}

/// Applies `mats[j]` along axis `j` (identity where `None`).
pub fn apply_axis_operators(
    f: &GridFunction,
    mats: &[Option<&AxisMatrix>],
) -> Result<GridFunction> {
    let grid = &f.grid;
    if mats.len() != grid.dim() {
        return Err(Error::GridMismatch(
            "one operator slot per axis required".into(),
        ));
    }
    let mut values = f.values.clone();
    let shape = grid.shape();
    for (j, m) in mats.iter().enumerate() {
        let Some(m) = m else { continue };
        if m.n != shape[j] {
            return Err(Error::GridMismatch(format!(
                "axis {j} has {} nodes but the operator is {}x{}",
                shape[j], m.n, m.n
            )));
        }
        values = apply_along(&values, &shape, j, m);
    }
    GridFunction::new(grid.clone(), values)
}

fn apply_along(values: &[f64], shape: &[usize], axis: usize, m: &AxisMatrix) -> Vec<f64> {
    let len = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    // nonzero band of each row; short-time kernels are narrow
    let bands: Vec<(usize, usize)> = (0..len)
        .map(|i| {
            let row = m.row(i);
            let lo = row.iter().position(|v| *v != 0.0).unwrap_or(0);
            let hi = row.iter().rposition(|v| *v != 0.0).map_or(lo, |p| p + 1);
            (lo, hi)
        })
        .collect();
    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(len * stride)
        .zip(values.par_chunks(len * stride))
        .for_each(|(dst, src)| {
            for (i, &(lo, hi)) in bands.iter().enumerate() {
                let row = m.row(i);
                let target = &mut dst[i * stride..(i + 1) * stride];
                for k in lo..hi {
                    let w = row[k];
                    if w == 0.0 {
                        continue;
                    }
                    for (d, s) in target.iter_mut().zip(&src[k * stride..(k + 1) * stride]) {
                        *d += w * s;
                    }
                }
            }
        });
    out
}

fn check_dims(nu: &NuVector, grid: &Grid) -> Result<()> {
    if nu.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "order vector has {} components, grid has {} axes",
            nu.dim(),
            grid.dim()
        )));
    }
    Ok(())
}

/// Per-axis heat kernel matrices, reusing equal (axis, order) pairs.
pub(crate) fn semigroup_matrices(nu: &NuVector, t: f64, grid: &Grid) -> Vec<AxisMatrix> {
    let mut mats: Vec<AxisMatrix> = Vec::with_capacity(grid.dim());
    for (j, axis) in grid.axes.iter().enumerate() {
        let v = nu.as_slice()[j];
        let reuse = (0..j).find(|&i| grid.axes[i] == *axis && nu.as_slice()[i] == v);
        let m = match reuse {
            Some(i) => mats[i].clone(),
            None => kernel_matrix(axis, t, |x, y| reduced_unchecked(v, t, x, y)),
        };
        mats.push(m);
    }
    mats
}

/// `e^{-tΔ_ν} f` on the grid.
pub fn apply_semigroup(nu: &NuVector, t: f64, f: &GridFunction) -> Result<GridFunction> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain(format!("semigroup time must be positive, got {t}")));
    }
    check_dims(nu, &f.grid)?;
    let mats = semigroup_matrices(nu, t, &f.grid);
    let refs: Vec<Option<&AxisMatrix>> = mats.iter().map(Some).collect();
    apply_axis_operators(f, &refs)
}

/// `max_{t ∈ t_grid} |e^{-tΔ_ν} f|` pointwise.
pub fn maximal_function(nu: &NuVector, f: &GridFunction, t_grid: &[f64]) -> Result<GridFunction> {
    let mut out = maximal_function_many(nu, std::slice::from_ref(f), t_grid)?;
    Ok(out.pop().expect("one input, one output"))
}

/// [`maximal_function`] for several functions on one grid, building each
/// time's kernel matrices once.
pub fn maximal_function_many(
    nu: &NuVector,
    fs: &[GridFunction],
    t_grid: &[f64],
) -> Result<Vec<GridFunction>> {
    if t_grid.is_empty() {
        return Err(domain("maximal function needs at least one time"));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(domain(format!("semigroup time must be positive, got {t}")));
    }
    let Some(first) = fs.first() else {
        return Ok(Vec::new());
    };
    for f in fs {
        first.check_same_grid(f)?;
    }
    check_dims(nu, &first.grid)?;
    let mut out: Vec<GridFunction> = fs
        .iter()
        .map(|f| GridFunction::zeros(f.grid.clone()))
        .collect();
    for &t in t_grid {
        let mats = semigroup_matrices(nu, t, &first.grid);
        let refs: Vec<Option<&AxisMatrix>> = mats.iter().map(Some).collect();
        for (f, o) in fs.iter().zip(out.iter_mut()) {
            let g = apply_axis_operators(f, &refs)?;
            for (a, v) in o.values.iter_mut().zip(&g.values) {
                *a = a.max(v.abs());
            }
        }
    }
    Ok(out)
}

/// Dyadic times `2^m`, `m = -10..=6`.
pub fn default_t_grid() -> Vec<f64> {
    (-10..=6).map(|m| 2.0_f64.powi(m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Spacing;

    #[test]
    fn zero_in_zero_out() {
        let g = Grid::cube(Spacing::Logarithmic, 0.01, 20.0, 80, 1).unwrap();
        let nu = NuVector::scalar(0.3).unwrap();
        let out = apply_semigroup(&nu, 0.5, &GridFunction::zeros(g)).unwrap();
        assert!(out.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn positivity_and_linearity() {
        let g = Grid::cube(Spacing::Uniform, 0.05, 10.0, 120, 1).unwrap();
        let nu = NuVector::scalar(1.1).unwrap();
        let f = GridFunction::from_fn(g.clone(), |x| (-(x[0] - 3.0).powi(2)).exp());
        let h = GridFunction::from_fn(g, |x| (x[0] / 5.0).sin().abs());
        for t in [1e-4, 0.01, 1.0] {
            let a = apply_semigroup(&nu, t, &f).unwrap();
            assert!(a.values.iter().all(|v| *v >= 0.0));
            let b = apply_semigroup(&nu, t, &h).unwrap();
            let comb = apply_semigroup(&nu, t, &f.axpy(-2.0, &h).unwrap()).unwrap();
            for i in 0..a.values.len() {
                assert!((comb.values[i] - (a.values[i] - 2.0 * b.values[i])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn maximal_function_is_monotone_in_times() {
        let g = Grid::cube(Spacing::Logarithmic, 0.05, 10.0, 60, 1).unwrap();
        let nu = NuVector::scalar(0.5).unwrap();
        let f = GridFunction::from_fn(g, |x| {
            if (1.0..2.0).contains(&x[0]) {
                1.0
            } else {
                -0.5
            }
        });
        let small = maximal_function(&nu, &f, &[0.1, 1.0]).unwrap();
        let big = maximal_function(&nu, &f, &[0.01, 0.1, 1.0, 4.0]).unwrap();
        assert!(small.values.iter().zip(&big.values).all(|(a, b)| a <= b));
        assert!(small.values.iter().all(|v| *v >= 0.0));
        assert!(maximal_function(&nu, &f, &[]).is_err());
    }
}
