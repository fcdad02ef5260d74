//! Polynomials of bounded degree and minimizing polynomials on balls.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{nodes_in_ball, Ball};
use crate::error::{domain, Error, Result};
use crate::grid::GridFunction;

/// Multi-indices `α ∈ ℕ^n` with `|α| ≤ m`, graded then lexicographic (first
/// coordinate varying slowest).
pub fn multi_indices(n: usize, m: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n {
            if left == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for a in (0..=left).rev() {
            prefix.push(a);
            rec(n, left - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=m {
        rec(n, total, &mut Vec::new(), &mut out);
    }
    out
}

/// `P(x) = Σ_α c_α ((x - center)/scale)^α` over `|α| ≤ degree`.
///
/// Storing the basis centred and scaled keeps the moment systems well
/// conditioned; [`PolyND::monomial_coefficients`] converts to `x^α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyND {
    pub degree: u32,
    pub center: Vec<f64>,
    pub scale: f64,
    pub indices: Vec<Vec<u32>>,
    pub coefficients: Vec<f64>,
}

impl PolyND {
    pub fn new(degree: u32, center: Vec<f64>, scale: f64, coefficients: Vec<f64>) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(domain(format!(
                "polynomial scale must be positive, got {scale}"
            )));
        }
        let indices = multi_indices(center.len(), degree);
        if coefficients.len() != indices.len() {
            return Err(domain(format!(
                "degree {degree} in {} variables needs {} coefficients, got {}",
                center.len(),
                indices.len(),
                coefficients.len()
            )));
        }
        Ok(Self {
            degree,
            center,
            scale,
            indices,
            coefficients,
        })
    }

    /// Polynomial in the plain monomials `x^α`.
    pub fn from_monomials(n: usize, degree: u32, coefficients: Vec<f64>) -> Result<Self> {
        Self::new(degree, vec![0.0; n], 1.0, coefficients)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let u: Vec<f64> = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) / self.scale)
            .collect();
        self.indices
            .iter()
            .zip(&self.coefficients)
            .map(|(al, c)| c * monomial(&u, al))
            .sum()
    }

    /// Coefficients of `x^α`, same index order.
    pub fn monomial_coefficients(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.indices.len()];
        let pos = |b: &[u32]| {
            self.indices
                .iter()
                .position(|a| a == b)
                .expect("closed under ≤")
        };
        for (al, c) in self.indices.iter().zip(&self.coefficients) {
            // Π_j ((x_j - c_j)/s)^{α_j} = s^{-|α|} Π_j Σ_{β_j} C(α_j, β_j) x_j^{β_j} (-c_j)^{α_j-β_j}
            let norm = self.scale.powi(-(al.iter().sum::<u32>() as i32));
            for beta in multi_indices(al.len(), al.iter().sum()) {
                if beta.iter().zip(al).any(|(b, a)| b > a) {
                    continue;
                }
                let mut term = c * norm;
                for j in 0..al.len() {
                    term *=
                        binomial(al[j], beta[j]) * (-self.center[j]).powi((al[j] - beta[j]) as i32);
                }
                out[pos(&beta)] += term;
            }
        }
        out
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

pub(crate) fn monomial(u: &[f64], al: &[u32]) -> f64 {
    u.iter().zip(al).map(|(v, &a)| v.powi(a as i32)).product()
}

/// Largest condition number accepted for a moment matrix.
pub(crate) const MAX_CONDITION: f64 = 1e12;

/// Weighted Gram matrix of the centred, scaled monomials over `nodes`, with
/// the basis values per node.
pub(crate) fn moment_system(
    f: &GridFunction,
    nodes: &[usize],
    indices: &[Vec<u32>],
    center: &[f64],
    scale: f64,
) -> (DMatrix<f64>, Vec<Vec<f64>>) {
    let basis: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&i| {
            let u: Vec<f64> = f
                .grid
                .node(i)
                .iter()
                .zip(center)
                .map(|(a, c)| (a - c) / scale)
                .collect();
            indices.iter().map(|al| monomial(&u, al)).collect()
        })
        .collect();
    let m = indices.len();
    let mut gram = DMatrix::zeros(m, m);
    for (row, &i) in basis.iter().zip(nodes) {
        let w = f.grid.weight(i);
        for a in 0..m {
            for b in 0..=a {
                gram[(a, b)] += w * row[a] * row[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    (gram, basis)
}

pub(crate) fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// `P_B^M g`: the polynomial of degree `≤ m` whose moments against every
/// `x^α`, `|α| ≤ m`, match those of `g` over the grid nodes in `ball`.
pub fn minimizing_polynomial(g: &GridFunction, ball: &Ball, m: u32) -> Result<PolyND> {
    let n = g.grid.dim();
    if ball.dim() != n {
        return Err(Error::GridMismatch(
            "ball and grid dimensions differ".into(),
        ));
    }
    let nodes = nodes_in_ball(&g.grid, ball);
    let indices = multi_indices(n, m);
    if nodes.len() < indices.len() {
        return Err(Error::IllConditioned(format!(
            "ball holds {} grid nodes, degree {m} needs at least {}",
            nodes.len(),
            indices.len()
        )));
    }
    let (gram, basis) = moment_system(g, &nodes, &indices, &ball.center, ball.radius);
    let cond = condition_number(&gram);
    if !(cond < MAX_CONDITION) {
        return Err(Error::IllConditioned(format!(
            "moment matrix condition number {cond:.3e}; the grid does not resolve the ball"
        )));
    }
    let mut rhs = DVector::zeros(indices.len());
    for (row, &i) in basis.iter().zip(&nodes) {
        let wg = g.grid.weight(i) * g.values[i];
        for (a, v) in row.iter().enumerate() {
            rhs[a] += wg * v;
        }
    }
    let sol = gram
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::IllConditioned("singular moment matrix".into()))?;
    // one step of iterative refinement
    let resid = &rhs - &gram * &sol;
    let corr = gram
        .lu()
        .solve(&resid)
        .unwrap_or_else(|| DVector::zeros(indices.len()));
    let coeffs = (sol + corr).iter().copied().collect();
    PolyND::new(m, ball.center.clone(), ball.radius, coeffs)
}

/// Moments `Σ_B w (g - P) ((x - x_B)/r_B)^α`, each divided by
/// `Σ_B w |g| |((x - x_B)/r_B)^α|` (or returned raw when that is zero).
pub fn moment_residuals(g: &GridFunction, ball: &Ball, p: &PolyND) -> Vec<f64> {
    let nodes = nodes_in_ball(&g.grid, ball);
    let indices = multi_indices(g.grid.dim(), p.degree);
    let mut num = vec![0.0; indices.len()];
    let mut den = vec![0.0; indices.len()];
    for &i in &nodes {
        let x = g.grid.node(i);
        let u: Vec<f64> = x
            .iter()
            .zip(&ball.center)
            .map(|(a, c)| (a - c) / ball.radius)
            .collect();
        let w = g.grid.weight(i);
        let d = g.values[i] - p.eval(&x);
        for (a, al) in indices.iter().enumerate() {
            let b = monomial(&u, al);
            num[a] += w * d * b;
            den[a] += w * g.values[i].abs() * b.abs();
        }
    }
    num.iter()
        .zip(&den)
        .map(|(a, b)| if *b > 0.0 { (a / b).abs() } else { a.abs() })
        .collect()
}
