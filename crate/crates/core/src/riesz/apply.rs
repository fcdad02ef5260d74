//! Riesz transforms and negative powers applied to grid functions.
//!
//! For each `t` node the operator `δ^k e^{-tΔ_ν}` is a tensor product of 1-D
//! kernel matrices, built once and applied to every input. Times below
//! `t_lo = max(t_min, h²)` (`h` the smallest grid spacing) are handled by the
//! small-time expansion `e^{-tΔ} f ≈ f - tΔf`, with derivatives taken by
//! finite differences.

use super::{power_tail, MultiIndex, SubordinationPlan};
use crate::error::{domain, Error, Result};
use crate::grid::{
    apply_axis_operators, delta_fd_matrix, kernel_matrix, laplacian_fd, semigroup_matrices,
    AxisMatrix, Grid, GridFunction,
};
use crate::heat::{HeatKernelExpansion, NuVector};
use crate::special::gamma;

fn check_inputs(nu: &NuVector, fs: &[GridFunction]) -> Result<Grid> {
    let Some(first) = fs.first() else {
        return Err(domain("no input functions"));
    };
    for f in fs {
        first.check_same_grid(f)?;
    }
    if nu.dim() != first.grid.dim() {
        return Err(Error::GridMismatch(
            "order vector and grid dimensions differ".into(),
        ));
    }
    Ok(first.grid.clone())
}

/// Log-uniform times from `t_lo` to `t_max` and their spacing in `ln t`.
fn time_nodes(plan: &SubordinationPlan, t_lo: f64) -> (Vec<f64>, f64) {
    let (a, b) = (t_lo.ln(), plan.t_max.ln());
    let m = (((b - a) / std::f64::consts::LN_10) * f64::from(plan.nodes_per_decade))
        .ceil()
        .max(3.0) as usize;
    let h = (b - a) / m as f64;
    ((0..=m).map(|i| (a + h * i as f64).exp()).collect(), h)
}

/// `M*_{ij} = M_{ji} w_j / w_i`, the adjoint in the weighted inner product.
fn weighted_transpose(m: &AxisMatrix, w: &[f64]) -> AxisMatrix {
    let mut out = m.transpose();
    let n = m.n;
    for i in 0..n {
        for j in 0..n {
            out.data[i * n + j] *= w[j] / w[i];
        }
    }
    out
}

fn matrix_power(m: &AxisMatrix, k: u32) -> AxisMatrix {
    let n = m.n;
    let mut acc = AxisMatrix {
        n,
        data: (0..n * n)
            .map(|i| if i / n == i % n { 1.0 } else { 0.0 })
            .collect(),
    };
    for _ in 0..k {
        let mut next = vec![0.0; n * n];
        for i in 0..n {
            for l in 0..n {
                let a = acc.data[i * n + l];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    next[i * n + j] += a * m.data[l * n + j];
                }
            }
        }
        acc.data = next;
    }
    acc
}

/// Running trapezoid in `u = ln t` over per-node contributions `t^s g(t)`,
/// finished with endpoint corrections and the power-law tail.
struct TimeSum {
    h: f64,
    acc: Vec<f64>,
    first: Vec<f64>,
    recent: [Vec<f64>; 3],
}

impl TimeSum {
    fn new(len: usize, h: f64) -> Self {
        Self {
            h,
            acc: vec![0.0; len],
            first: Vec::new(),
            recent: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
        }
    }

    fn push(&mut self, node: usize, nodes: usize, scaled: Vec<f64>) {
        let w = if node == 0 || node == nodes - 1 {
            0.5 * self.h
        } else {
            self.h
        };
        for (a, v) in self.acc.iter_mut().zip(&scaled) {
            *a += w * v;
        }
        if node == 0 {
            self.first = scaled.clone();
        }
        self.recent.rotate_left(1);
        self.recent[2] = scaled;
    }

    /// `lower_rate` is the exponent `r` of the small-`t` behaviour `t^r`.
    fn finish(self, lower_rate: f64) -> Vec<f64> {
        let h = self.h;
        let mut out = self.acc;
        for (p, o) in out.iter_mut().enumerate() {
            let g = |i: usize| self.recent[i][p];
            let (tail, _) = power_tail([(0.0, g(0)), (h, g(1)), (2.0 * h, g(2))]);
            let alpha = if tail != 0.0 { g(2) / tail } else { 0.0 };
            *o += tail + h * h / 12.0 * (alpha * g(2) + lower_rate * self.first[p]);
        }
        out
    }
}

fn riesz_core(
    nu: &NuVector,
    k: &MultiIndex,
    fs: &[GridFunction],
    plan: &SubordinationPlan,
    adjoint: bool,
) -> Result<Vec<GridFunction>> {
    plan.validate()?;
    let grid = check_inputs(nu, fs)?;
    if k.dim() != grid.dim() {
        return Err(Error::GridMismatch(
            "multi-index and grid dimensions differ".into(),
        ));
    }
    if k.order() == 0 {
        return Err(domain("Riesz transforms need |k| ≥ 1"));
    }
    let s = 0.5 * f64::from(k.order());
    let h_min = grid.min_spacing();
    let t_lo = plan.t_min.max(h_min * h_min);
    let (ts, h) = time_nodes(plan, t_lo);
    let nus = nu.as_slice();
    let ks = k.as_slice();
    let exps: Vec<HeatKernelExpansion> = nus
        .iter()
        .zip(ks)
        .map(|(&v, &kj)| HeatKernelExpansion::delta_power(v, kj))
        .collect();
    let mut sums: Vec<TimeSum> = fs.iter().map(|_| TimeSum::new(grid.len(), h)).collect();
    for (node, &t) in ts.iter().enumerate() {
        let mut mats: Vec<AxisMatrix> = Vec::with_capacity(grid.dim());
        for (j, axis) in grid.axes.iter().enumerate() {
            let reuse =
                (0..j).find(|&i| grid.axes[i] == *axis && nus[i] == nus[j] && ks[i] == ks[j]);
            let m = match reuse {
                Some(i) => mats[i].clone(),
                None => {
                    let e = &exps[j];
                    let m = kernel_matrix(axis, t, |x, y| e.eval_reduced(t, x, y));
                    if adjoint {
                        weighted_transpose(&m, &axis.weights)
                    } else {
                        m
                    }
                }
            };
            mats.push(m);
        }
        let refs: Vec<Option<&AxisMatrix>> = mats.iter().map(Some).collect();
        let ts_pow = t.powf(s);
        for (i, f) in fs.iter().enumerate() {
            let g = apply_axis_operators(f, &refs)?;
            let scaled = g.values.iter().map(|v| ts_pow * v).collect();
            sums[i].push(node, ts.len(), scaled);
        }
    }
    // ∫₀^{t_lo} t^{s-1} δ^k f dt
    let mut fd: Vec<Option<AxisMatrix>> = Vec::with_capacity(grid.dim());
    for (j, axis) in grid.axes.iter().enumerate() {
        if ks[j] == 0 {
            fd.push(None);
            continue;
        }
        let d = matrix_power(&delta_fd_matrix(axis, nus[j])?, ks[j]);
        fd.push(Some(if adjoint {
            weighted_transpose(&d, &axis.weights)
        } else {
            d
        }));
    }
    let fd_refs: Vec<Option<&AxisMatrix>> = fd.iter().map(Option::as_ref).collect();
    let norm = 1.0 / gamma(s);
    let head = t_lo.powf(s) / s;
    let mut out = Vec::with_capacity(fs.len());
    for (f, sum) in fs.iter().zip(sums) {
        let small = apply_axis_operators(f, &fd_refs)?;
        let total = sum.finish(s);
        let values = total
            .iter()
            .zip(&small.values)
            .map(|(a, b)| norm * (a + head * b))
            .collect();
        out.push(GridFunction::new(grid.clone(), values)?);
    }
    Ok(out)
}

/// `δ_ν^k Δ_ν^{-|k|/2} f` for several functions on one grid.
pub fn riesz_apply_many(
    nu: &NuVector,
    k: &MultiIndex,
    fs: &[GridFunction],
    plan: &SubordinationPlan,
) -> Result<Vec<GridFunction>> {
    riesz_core(nu, k, fs, plan, false)
}

/// `δ_ν^k Δ_ν^{-|k|/2} f`.
///
/// The part of the time integral beyond `t_max` is extrapolated node by node
/// from a power-law fit of the last three samples, which is not linear in
/// `f`; keep `t_max` well above the squared grid diameter when linearity
/// matters.
pub fn riesz_apply(
    nu: &NuVector,
    k: &MultiIndex,
    f: &GridFunction,
    plan: &SubordinationPlan,
) -> Result<GridFunction> {
    Ok(riesz_core(nu, k, std::slice::from_ref(f), plan, false)?.remove(0))
}

/// The adjoint of [`riesz_apply`] in the grid inner product: the operator with
/// the transposed kernel `R(y, x)`.
pub fn riesz_adjoint_apply(
    nu: &NuVector,
    k: &MultiIndex,
    f: &GridFunction,
    plan: &SubordinationPlan,
) -> Result<GridFunction> {
    Ok(riesz_core(nu, k, std::slice::from_ref(f), plan, true)?.remove(0))
}

/// `Δ_ν^{-s} f = Γ(s)^{-1} ∫₀^∞ u^{s-1} e^{-uΔ_ν} f du`.
pub fn fractional_inverse_apply(
    nu: &NuVector,
    s: f64,
    f: &GridFunction,
    plan: &SubordinationPlan,
) -> Result<GridFunction> {
    plan.validate()?;
    if !(s > 0.0) || !s.is_finite() {
        return Err(domain(format!(
            "fractional power must be positive, got {s}"
        )));
    }
    let grid = check_inputs(nu, std::slice::from_ref(f))?;
    let h_min = grid.min_spacing();
    let u_lo = plan.t_min.max(h_min * h_min);
    let (ts, h) = time_nodes(plan, u_lo);
    let mut sum = TimeSum::new(grid.len(), h);
    for (node, &t) in ts.iter().enumerate() {
        let mats = semigroup_matrices(nu, t, &grid);
        let refs: Vec<Option<&AxisMatrix>> = mats.iter().map(Some).collect();
        let g = apply_axis_operators(f, &refs)?;
        let tp = t.powf(s);
        sum.push(node, ts.len(), g.values.iter().map(|v| tp * v).collect());
    }
    let total = sum.finish(s);
    let lap = laplacian_fd(nu, f)?;
    let (c0, c1) = (u_lo.powf(s) / s, u_lo.powf(s + 1.0) / (s + 1.0));
    let norm = 1.0 / gamma(s);
    let values = total
        .iter()
        .zip(f.values.iter().zip(&lap.values))
        .map(|(a, (fv, lv))| norm * (a + c0 * fv - c1 * lv))
        .collect();
    GridFunction::new(grid, values)
}
