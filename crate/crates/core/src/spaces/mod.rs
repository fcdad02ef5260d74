//! Function-space tools on the orthant: the critical function, atoms,
//! minimizing polynomials, Campanato norms, the critical-radius covering and
//! the dual-basis splitting of atoms.

mod atoms;
mod bmo;
mod covering;
mod decompose;
mod poly;

use serde::{Deserialize, Serialize};

pub use atoms::{
    validate_f_atom, validate_p_rho_atom, AtomCandidate, AtomFixture, AtomOptions, AtomVerdict,
    FAtomKind, FAtomVerdict, FixtureAxis, FixtureKind,
};
pub use bmo::{bmo_norm, BallSampler, BmoEstimate, Branches};
pub use covering::{vitali_covering, BoxDomain, CoveringResult};
pub use decompose::{
    atom_dual_decompose, AnnulusStats, DecompositionSummary, DualDecomposition, SubAtom,
};
pub use poly::{minimizing_polynomial, moment_residuals, multi_indices, PolyND};

use crate::error::{domain, Result};
use crate::grid::Grid;

/// `ρ(x) = min_j x_j / 16`.
pub fn critical_function(x: &[f64]) -> Result<f64> {
    if x.is_empty() || x.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(domain(
            "critical function needs a point with positive coordinates",
        ));
    }
    Ok(x.iter().copied().fold(f64::INFINITY, f64::min) / 16.0)
}

/// Euclidean ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(domain(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if center.is_empty() || center.iter().any(|v| !(*v > 0.0)) {
            return Err(domain("ball center must have positive coordinates"));
        }
        Ok(Self { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Whether `x` lies in the closed ball, up to a relative slack.
    pub fn contains(&self, x: &[f64]) -> bool {
        dist(&self.center, x) <= self.radius * (1.0 + 1e-12)
    }

    /// Lebesgue measure of the ball.
    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32)
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    std::f64::consts::PI.powf(nf / 2.0) / crate::special::gamma(nf / 2.0 + 1.0)
}

/// Flat indices of the grid nodes inside `ball`, in grid order.
pub(crate) fn nodes_in_ball(grid: &Grid, ball: &Ball) -> Vec<usize> {
    let ranges: Vec<(usize, usize)> = grid
        .axes
        .iter()
        .zip(&ball.center)
        .map(|(ax, &c)| {
            let slack = ball.radius * (1.0 + 1e-12);
            let lo = ax.nodes.partition_point(|&v| v < c - slack);
            let hi = ax.nodes.partition_point(|&v| v <= c + slack);
            (lo, hi)
        })
        .collect();
    if ranges.iter().any(|(lo, hi)| lo >= hi) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        let x: Vec<f64> = idx
            .iter()
            .enumerate()
            .map(|(j, &i)| grid.axes[j].nodes[i])
            .collect();
        if ball.contains(&x) {
            out.push(grid.flat_index(&idx));
        }
        // odometer over the bounding box, last axis fastest
        let mut j = idx.len();
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < ranges[j].1 {
                break;
            }
            idx[j] = ranges[j].0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Spacing;
    use proptest::prelude::*;

    #[test]
    fn critical_function_values() {
        assert_eq!(critical_function(&[16.0, 32.0, 48.0]).unwrap(), 1.0);
        assert_eq!(critical_function(&[8.0]).unwrap(), 0.5);
        assert!(critical_function(&[1.0, 0.0]).is_err());
        assert!(critical_function(&[-1.0]).is_err());
    }

    #[test]
    fn ball_nodes_match_brute_force() {
        let g = Grid::cube(Spacing::Logarithmic, 0.5, 8.0, 30, 2).unwrap();
        let b = Ball::new(vec![2.0, 3.0], 1.1).unwrap();
        let fast = nodes_in_ball(&g, &b);
        let slow: Vec<usize> = (0..g.len()).filter(|&i| b.contains(&g.node(i))).collect();
        assert_eq!(fast, slow);
        assert!(!fast.is_empty());
    }

    proptest! {
        #[test]
        fn critical_radius_is_locally_comparable(
            x in proptest::collection::vec(0.01f64..100.0, 1..4),
            dir in proptest::collection::vec(-1.0f64..1.0, 3),
            frac in 0.0f64..1.0,
        ) {
            let r = critical_function(&x).unwrap();
            let norm = dir.iter().take(x.len()).map(|d| d * d).sum::<f64>().sqrt().max(1e-9);
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + frac * r * d / norm).collect();
            let ratio = critical_function(&y).unwrap() / r;
            prop_assert!((0.5..=2.0).contains(&ratio));
        }
    }
}
