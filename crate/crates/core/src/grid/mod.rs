//! Tensor-product grids on boxes in `(0, ∞)^n` and functions sampled on them.

mod eigen;
mod fd;
mod semigroup;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use eigen::{bessel_j, eigenfunction, EigenfunctionSpec};
pub(crate) use fd::delta_fd_matrix;
pub use fd::{apply_delta_fd, laplacian_fd};
pub(crate) use semigroup::semigroup_matrices;
pub use semigroup::{
    apply_axis_operators, apply_semigroup, default_t_grid, kernel_matrix, maximal_function,
    maximal_function_many, AxisMatrix,
};

use crate::error::{domain, Error, Result};
use crate::report::format_float;

/// Node placement along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Uniform,
    Logarithmic,
}

/// Nodes and quadrature weights on `[lo, hi]`.
///
/// Weights are the exact integrals of the piecewise-linear hat functions in
/// the axis coordinate (`y` for uniform axes, `ln y` for logarithmic ones), so
/// `Σ w_j = hi - lo` holds to rounding for both spacings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub spacing: Spacing,
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Axis {
    pub fn new(spacing: Spacing, lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || !hi.is_finite() {
            return Err(domain(format!("axis needs 0 < lo < hi, got [{lo}, {hi}]")));
        }
        if count < 2 {
            return Err(domain("axis needs at least two nodes"));
        }
        let m = (count - 1) as f64;
        let nodes: Vec<f64> = match spacing {
            Spacing::Uniform => (0..count)
                .map(|i| {
                    if i == count - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / m
                    }
                })
                .collect(),
            Spacing::Logarithmic => {
                let step = (hi / lo).ln() / m;
                (0..count)
                    .map(|i| {
                        if i == count - 1 {
                            hi
                        } else {
                            lo * (step * i as f64).exp()
                        }
                    })
                    .collect()
            }
        };
        let mut weights = vec![0.0; count];
        for j in 0..count - 1 {
            let (a, b) = (nodes[j], nodes[j + 1]);
            let (wl, wr) = match spacing {
                Spacing::Uniform => (0.5 * (b - a), 0.5 * (b - a)),
                Spacing::Logarithmic => {
                    // ∫ hat(s) e^s ds over one cell in s = ln y
                    let ds = (b / a).ln();
                    let wr = b - (b - a) / ds;
                    let wl = (b - a) / ds - a;
                    (wl, wr)
                }
            };
            weights[j] += wl;
            weights[j + 1] += wr;
        }
        Ok(Self {
            spacing,
            lo,
            hi,
            nodes,
            weights,
        })
    }

    pub fn uniform(lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::new(Spacing::Uniform, lo, hi, count)
    }

    pub fn logarithmic(lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::new(Spacing::Logarithmic, lo, hi, count)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Axis coordinate of a physical point.
    pub(crate) fn coord(&self, y: f64) -> f64 {
        match self.spacing {
            Spacing::Uniform => y,
            Spacing::Logarithmic => y.ln(),
        }
    }

    /// Physical point at an axis coordinate.
    pub(crate) fn point(&self, s: f64) -> f64 {
        match self.spacing {
            Spacing::Uniform => s,
            Spacing::Logarithmic => s.exp(),
        }
    }

    /// Largest cell width among cells touching `[a, b]`.
    pub(crate) fn max_spacing_in(&self, a: f64, b: f64) -> f64 {
        let (i0, i1) = self.cell_range(a, b);
        (i0..i1)
            .map(|j| self.nodes[j + 1] - self.nodes[j])
            .fold(0.0, f64::max)
    }

    /// Range of cells `[i0, i1)` meeting `[a, b]`.
    pub(crate) fn cell_range(&self, a: f64, b: f64) -> (usize, usize) {
        let n = self.nodes.len();
        let i0 = self.nodes.partition_point(|&v| v <= a).saturating_sub(1);
        let i1 = self.nodes.partition_point(|&v| v < b).clamp(1, n - 1);
        (i0.min(n - 2), i1.max(i0.min(n - 2) + 1))
    }
}

/// Tensor product of axes. Flat indices are row-major: the last axis varies
/// fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(domain("grid needs at least one axis"));
        }
        Ok(Self { axes })
    }

    /// The same axis on every coordinate of `[lo, hi]^n`.
    pub fn cube(spacing: Spacing, lo: f64, hi: f64, count: usize, n: usize) -> Result<Self> {
        let axis = Axis::new(spacing, lo, hi, count)?;
        Self::new(vec![axis; n])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::len).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (j, axis) in self.axes.iter().enumerate().rev() {
            idx[j] = flat % axis.len();
            flat /= axis.len();
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, axis)| acc * axis.len() + i)
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.nodes[i])
            .collect()
    }

    pub fn weight(&self, flat: usize) -> f64 {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.weights[i])
            .product()
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Box measure `Π (hi_j - lo_j)`.
    pub fn measure(&self) -> f64 {
        self.axes.iter().map(|a| a.hi - a.lo).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.axes)
                .all(|(v, a)| *v >= a.lo && *v <= a.hi)
    }

    /// Smallest cell width over all axes.
    pub fn min_spacing(&self) -> f64 {
        self.axes
            .iter()
            .flat_map(|a| a.nodes.windows(2).map(|w| w[1] - w[0]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(s)?;
        for a in &g.axes {
            if a.nodes.len() != a.weights.len() || a.nodes.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config(
                    "grid axis nodes must increase and match weights".into(),
                ));
            }
        }
        Ok(g)
    }
}

/// Values sampled on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Grid, f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        Self { grid, values }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                "functions live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    /// `Σ w_i f_i`.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.grid.weight(i))
            .sum()
    }

    /// `Σ w_i f_i g_i`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (a, b))| a * b * self.grid.weight(i))
            .sum())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV with header `x1,…,xn,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.grid.dim()).map(|j| format!("x{j}")).collect();
        header.push("value".into());
        w.write_record(&header)?;
        for (i, v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.grid.node(i).iter().map(|&c| format_float(c)).collect();
            row.push(format_float(*v));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads values for `grid` from CSV written by [`GridFunction::write_csv`];
    /// rows must appear in grid order.
    pub fn read_csv<R: Read>(grid: Grid, input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let n = grid.dim();
        let mut values = Vec::with_capacity(grid.len());
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != n + 1 {
                return Err(Error::GridMismatch(format!(
                    "row {i} has {} fields",
                    rec.len()
                )));
            }
            let node = grid.node(i.min(grid.len().saturating_sub(1)));
            for j in 0..n {
                let c: f64 = rec[j]
                    .parse()
                    .map_err(|_| Error::Io(format!("bad coordinate in row {i}")))?;
                if (c - node[j]).abs() > 1e-9 * node[j].abs().max(1.0) {
                    return Err(Error::GridMismatch(format!(
                        "row {i} is not at grid node {i}"
                    )));
                }
            }
            values.push(
                rec[n]
                    .parse()
                    .map_err(|_| Error::Io(format!("bad value in row {i}")))?,
            );
        }
        Self::new(grid, values)
    }
}

/// `(Σ w_i |f_i|^p)^{1/p}`, or `max |f_i|` for `p = ∞`. A quasi-norm for `p < 1`.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(domain(format!(
            "Lebesgue exponent must be positive, got {p}"
        )));
    }
    if p.is_infinite() {
        return Ok(f.sup_norm());
    }
    let s: f64 = f
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| f.grid.weight(i) * v.abs().powf(p))
        .sum();
    Ok(s.powf(1.0 / p))
}
