//! Splitting a small atom along dyadic annuli with dual polynomial bases.
//!
//! With `S_0 = B`, `S_j = 2^j B \ 2^{j-1} B` and `⟨f, g⟩_j = ⨍_{S_j} f g`,
//! let `v_{j,α}` be the polynomials with `⟨v_{j,α}, (· - x_B)^β⟩_j = δ_{αβ}`
//! and `c_α = ∫ a (x - x_B)^α`. Then
//!
//! - `a_1 = a - Σ_α c_α v_{0,α} χ_{S_0} / |S_0|` has vanishing moments,
//! - `a_{2,j,α} = c_α (v_{j,α} χ_{S_j}/|S_j| - v_{j+1,α} χ_{S_{j+1}}/|S_{j+1}|)`
//!   for `j < j_0 - 1`,
//! - `a_{3,α} = c_α v_{j_0-1,α} χ_{S_{j_0-1}} / |S_{j_0-1}|`,
//!
//! and the sum telescopes back to `a`. All integrals are grid quadratures, so
//! the identities hold to rounding.

use serde::{Deserialize, Serialize};

use super::atoms::AtomCandidate;
use super::poly::{condition_number, monomial, multi_indices};
use super::{critical_function, dist};
use crate::error::{domain, Error, Result};
use crate::grid::GridFunction;

/// One piece `a_{2,j,α}` or `a_{3,α}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubAtom {
    pub j: usize,
    pub alpha: Vec<u32>,
    pub f: GridFunction,
    pub sup_norm: f64,
}

/// Per-annulus data kept for certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusStats {
    pub j: usize,
    pub nodes: usize,
    pub measure: f64,
    /// Condition number of the scaled monomial Gram matrix.
    pub condition: f64,
    /// `‖v_{j,α}‖_∞ (2^j r)^{|α|}` per `α`.
    pub dual_sup: Vec<f64>,
    /// `max |⟨v_{j,α}, (· - x_B)^β⟩_j (2^j r)^{|α|-|β|} - δ_{αβ}|`.
    pub pairing_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualDecomposition {
    pub center: Vec<f64>,
    pub radius: f64,
    pub rho: f64,
    pub j0: usize,
    pub omega: u32,
    pub indices: Vec<Vec<u32>>,
    /// `c_α`.
    pub moments: Vec<f64>,
    pub a1: GridFunction,
    pub a2: Vec<SubAtom>,
    pub a3: Vec<SubAtom>,
    pub annuli: Vec<AnnulusStats>,
}

/// JSON-facing summary of a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub j0: usize,
    pub omega: u32,
    pub rho: f64,
    pub moments: Vec<(Vec<u32>, f64)>,
    pub reconstruction_residual: f64,
    pub a1_moment_residuals: Vec<f64>,
    pub pairing_error: f64,
    /// `max_α ‖a_{2,j,α}‖_∞` per `j`.
    pub a2_sup: Vec<f64>,
    pub a3_sup: f64,
    pub annuli: Vec<AnnulusStats>,
}

const GS_TOL: f64 = 1e-8;

/// Index of the annulus holding distance `d`, if any below `levels`.
fn annulus(d: f64, r: f64, levels: usize) -> Option<usize> {
    let slack = 1.0 + 1e-12;
    if d <= r * slack {
        return Some(0);
    }
    let j = (d / r).log2().ceil().max(1.0) as usize;
    // guard the rounding of log2 at the shell boundaries
    let j = if d <= r * 2f64.powi(j as i32 - 1) * slack {
        j - 1
    } else {
        j
    };
    (j < levels).then_some(j)
}

/// Orthonormalises `q` (rows are basis vectors at the annulus nodes) in the
/// weighted mean inner product, twice-through Gram–Schmidt. Returns `L` with
/// `u = L q`, or `None` when a vector loses all but `GS_TOL` of its norm.
fn gram_schmidt(q: &[Vec<f64>], w: &[f64], meas: f64) -> Option<Vec<Vec<f64>>> {
    let m = q.len();
    let ip = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .zip(w)
            .map(|((x, y), w)| w * x * y)
            .sum::<f64>()
            / meas
    };
    let mut u: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut l = vec![vec![0.0; m]; m];
    for k in 0..m {
        let mut v = q[k].clone();
        let mut coef = vec![0.0; m];
        coef[k] = 1.0;
        let norm0 = ip(&v, &v).sqrt();
        for _ in 0..2 {
            for g in 0..k {
                let h = ip(&u[g], &v);
                for (a, b) in v.iter_mut().zip(&u[g]) {
                    *a -= h * b;
                }
                for (c, lg) in coef.iter_mut().zip(&l[g]) {
                    *c -= h * lg;
                }
            }
        }
        let norm = ip(&v, &v).sqrt();
        if !(norm > GS_TOL * norm0) {
            return None;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        coef.iter_mut().for_each(|a| *a /= norm);
        u.push(v);
        l[k] = coef;
    }
    Some(l)
}

/// Splits an atom below the critical scale. `j_0` is fixed by
/// `2^{j_0} r ≥ ρ(x_B) > 2^{j_0-1} r` and moments run up to
/// `ω = ⌊n(1/p - 1)⌋`.
pub fn atom_dual_decompose(a: &AtomCandidate) -> Result<DualDecomposition> {
    let grid = &a.f.grid;
    let n = grid.dim();
    if a.ball.dim() != n {
        return Err(Error::GridMismatch(
            "ball and grid dimensions differ".into(),
        ));
    }
    if !(a.p > 0.0 && a.p <= 1.0) {
        return Err(domain(format!("p must lie in (0, 1], got {}", a.p)));
    }
    let (xb, r) = (&a.ball.center, a.ball.radius);
    let rho = critical_function(xb)?;
    if r >= rho {
        return Err(domain(
            "the ball is at least critical; the atom needs no splitting",
        ));
    }
    let mut j0 = 1;
    while 2f64.powi(j0 as i32) * r < rho {
        j0 += 1;
    }
    let outer = 2f64.powi(j0 as i32 - 1) * r;
    if grid
        .axes
        .iter()
        .zip(xb)
        .any(|(ax, &c)| c - outer < ax.lo || c + outer > ax.hi)
    {
        return Err(domain(format!(
            "annulus of radius {outer} leaves the grid box"
        )));
    }
    let omega = (n as f64 * (1.0 / a.p - 1.0) + 1e-12).floor() as u32;
    let indices = multi_indices(n, omega);
    let m = indices.len();

    let mut shell_nodes: Vec<Vec<usize>> = vec![Vec::new(); j0];
    let mut moments = vec![0.0; m];
    for i in 0..grid.len() {
        let x = grid.node(i);
        let d = dist(&x, xb);
        let v = a.f.values[i];
        if v != 0.0 {
            if d > r * (1.0 + 1e-12) {
                return Err(domain("atom has nonzero samples outside its ball"));
            }
            let u: Vec<f64> = x.iter().zip(xb).map(|(p, c)| p - c).collect();
            for (c, al) in moments.iter_mut().zip(&indices) {
                *c += grid.weight(i) * v * monomial(&u, al);
            }
        }
        if let Some(j) = annulus(d, r, j0) {
            shell_nodes[j].push(i);
        }
    }

    // dual values ṽ_{j,α} = v_{j,α} s_j^{|α|} at the shell nodes
    let mut duals: Vec<Vec<Vec<f64>>> = Vec::with_capacity(j0);
    let mut measures = Vec::with_capacity(j0);
    let mut annuli = Vec::with_capacity(j0);
    for (j, nodes) in shell_nodes.iter().enumerate() {
        let s = 2f64.powi(j as i32) * r;
        let w: Vec<f64> = nodes.iter().map(|&i| grid.weight(i)).collect();
        let meas: f64 = w.iter().sum();
        if nodes.len() < m || !(meas > 0.0) {
            return Err(Error::IllConditioned(format!(
                "annulus {j} holds {} grid nodes",
                nodes.len()
            )));
        }
        let q: Vec<Vec<f64>> = indices
            .iter()
            .map(|al| {
                nodes
                    .iter()
                    .map(|&i| {
                        let u: Vec<f64> = grid
                            .node(i)
                            .iter()
                            .zip(xb)
                            .map(|(p, c)| (p - c) / s)
                            .collect();
                        monomial(&u, al)
                    })
                    .collect()
            })
            .collect();
        let gram = nalgebra::DMatrix::from_fn(m, m, |a, b| {
            q[a].iter()
                .zip(&q[b])
                .zip(&w)
                .map(|((x, y), w)| w * x * y)
                .sum::<f64>()
                / meas
        });
        let condition = condition_number(&gram);
        let l = gram_schmidt(&q, &w, meas).ok_or_else(|| {
            Error::IllConditioned(format!(
                "annulus {j}: Gram–Schmidt lost rank (condition {condition:.3e})"
            ))
        })?;
        // ṽ_α = Σ_γ L_{γα} u_γ and u_γ = Σ_β L_{γβ} q_β, so ṽ_α = Σ_β (LᵀL)_{αβ} q_β
        let coef: Vec<Vec<f64>> = (0..m)
            .map(|al| {
                (0..m)
                    .map(|be| (0..m).map(|g| l[g][al] * l[g][be]).sum())
                    .collect()
            })
            .collect();
        let v: Vec<Vec<f64>> = coef
            .iter()
            .map(|c| {
                (0..nodes.len())
                    .map(|k| (0..m).map(|b| c[b] * q[b][k]).sum())
                    .collect()
            })
            .collect();
        let mut pairing_error: f64 = 0.0;
        for (al, va) in v.iter().enumerate() {
            for (be, qb) in q.iter().enumerate() {
                let p = va
                    .iter()
                    .zip(qb)
                    .zip(&w)
                    .map(|((x, y), w)| w * x * y)
                    .sum::<f64>()
                    / meas;
                let target = if al == be { 1.0 } else { 0.0 };
                pairing_error = pairing_error.max((p - target).abs());
            }
        }
        annuli.push(AnnulusStats {
            j,
            nodes: nodes.len(),
            measure: meas,
            condition,
            dual_sup: v
                .iter()
                .map(|va| va.iter().fold(0.0, |acc: f64, x| acc.max(x.abs())))
                .collect(),
            pairing_error,
        });
        duals.push(v);
        measures.push(meas);
    }

    // c_α v_{j,α} χ_{S_j} / |S_j| as a grid function
    let piece = |j: usize, al: usize| -> GridFunction {
        let s = 2f64.powi(j as i32) * r;
        let scale = moments[al] / (measures[j] * s.powi(indices[al].iter().sum::<u32>() as i32));
        let mut f = GridFunction::zeros(grid.clone());
        for (k, &i) in shell_nodes[j].iter().enumerate() {
            f.values[i] = scale * duals[j][al][k];
        }
        f
    };
    let sub = |j: usize, al: usize, f: GridFunction| SubAtom {
        j,
        alpha: indices[al].clone(),
        sup_norm: f.sup_norm(),
        f,
    };

    let mut a1 = a.f.clone();
    for al in 0..m {
        for (x, p) in a1.values.iter_mut().zip(piece(0, al).values) {
            *x -= p;
        }
    }
    let mut a2 = Vec::new();
    for j in 0..j0.saturating_sub(1) {
        for al in 0..m {
            let f = piece(j, al).axpy(-1.0, &piece(j + 1, al))?;
            a2.push(sub(j, al, f));
        }
    }
    let a3 = (0..m)
        .map(|al| sub(j0 - 1, al, piece(j0 - 1, al)))
        .collect();
    Ok(DualDecomposition {
        center: xb.clone(),
        radius: r,
        rho,
        j0,
        omega,
        indices,
        moments,
        a1,
        a2,
        a3,
        annuli,
    })
}

impl DualDecomposition {
    /// `max |a - a_1 - Σ a_2 - Σ a_3|` over the grid.
    pub fn reconstruction_residual(&self, a: &GridFunction) -> f64 {
        let mut sum = self.a1.values.clone();
        for s in self.a2.iter().chain(&self.a3) {
            for (x, v) in sum.iter_mut().zip(&s.f.values) {
                *x += v;
            }
        }
        sum.iter()
            .zip(&a.values)
            .map(|(s, v)| (s - v).abs())
            .fold(0.0, f64::max)
    }

    /// `|∫ a_1 (x - x_B)^α| / (‖a_1‖₁ r^{|α|})` per `α`.
    pub fn a1_moment_residuals(&self) -> Vec<f64> {
        let g = &self.a1.grid;
        let l1: f64 = (0..g.len())
            .map(|i| g.weight(i) * self.a1.values[i].abs())
            .sum();
        self.indices
            .iter()
            .map(|al| {
                let m: f64 = (0..g.len())
                    .filter(|&i| self.a1.values[i] != 0.0)
                    .map(|i| {
                        let u: Vec<f64> = g
                            .node(i)
                            .iter()
                            .zip(&self.center)
                            .map(|(p, c)| p - c)
                            .collect();
                        g.weight(i) * self.a1.values[i] * monomial(&u, al)
                    })
                    .sum();
                let scale = l1 * self.radius.powi(al.iter().sum::<u32>() as i32);
                if scale > 0.0 {
                    m.abs() / scale
                } else {
                    m.abs()
                }
            })
            .collect()
    }

    pub fn pairing_error(&self) -> f64 {
        self.annuli
            .iter()
            .map(|a| a.pairing_error)
            .fold(0.0, f64::max)
    }

    /// `max_α ‖a_{2,j,α}‖_∞` for `j = 0..j_0-2`.
    pub fn a2_sup_by_level(&self) -> Vec<f64> {
        let mut out = vec![0.0_f64; self.j0.saturating_sub(1)];
        for s in &self.a2 {
            out[s.j] = out[s.j].max(s.sup_norm);
        }
        out
    }

    /// Least-squares slope of `log₂` of the a₂ sup norms against `j`, i.e. the
    /// measured decay exponent (`sup ≈ C 2^{slope · j}`).
    pub fn a2_decay_exponent(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .a2_sup_by_level()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(j, v)| (j as f64, v.log2()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }

    /// `‖a_{2,j}‖_∞ |2^j B|^{1/p} 2^{j(2N + n - n/p)}`: bounded in `j` when the
    /// pieces are uniformly bounded multiples of the rescaled `(p, ρ)`-atoms
    /// with that geometric factor.
    pub fn atom_multiples(&self, p: f64, big_n: u32) -> Vec<f64> {
        let n = self.center.len() as f64;
        let exponent = 2.0 * f64::from(big_n) + n - n / p;
        let unit = super::unit_ball_volume(self.center.len());
        self.a2_sup_by_level()
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let vol = unit * (2f64.powi(j as i32) * self.radius).powf(n);
                v * vol.powf(1.0 / p) * 2f64.powf(j as f64 * exponent)
            })
            .collect()
    }

    pub fn summary(&self, a: &GridFunction) -> DecompositionSummary {
        DecompositionSummary {
            j0: self.j0,
            omega: self.omega,
            rho: self.rho,
            moments: self
                .indices
                .iter()
                .cloned()
                .zip(self.moments.iter().copied())
                .collect(),
            reconstruction_residual: self.reconstruction_residual(a),
            a1_moment_residuals: self.a1_moment_residuals(),
            pairing_error: self.pairing_error(),
            a2_sup: self.a2_sup_by_level(),
            a3_sup: self.a3.iter().map(|s| s.sup_norm).fold(0.0, f64::max),
            annuli: self.annuli.clone(),
        }
    }
}
