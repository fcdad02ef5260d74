//! Covering of a box by critical balls with a subordinate partition of unity.

use serde::{Deserialize, Serialize};

use super::{critical_function, dist, nodes_in_ball, Ball};
use crate::error::{domain, Error, Result};
use crate::grid::{Grid, GridFunction};

/// Closed box `Π [lo_j, hi_j]` with `lo_j > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(domain("box corners must have the same positive dimension"));
        }
        if lo.iter().any(|v| !(*v > 0.0)) {
            // ρ vanishes on the coordinate hyperplanes, so no finite covering exists
            return Err(domain("box must stay away from the coordinate hyperplanes"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a) || !b.is_finite()) {
            return Err(domain("box needs lo < hi with finite corners"));
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= a * (1.0 - 1e-14) && *v <= b * (1.0 + 1e-14))
    }
}

/// Centers `x_ξ`, radii `ρ(x_ξ)` and the partition `ψ_ξ`, stored as sparse
/// `(node, value)` lists over the box nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringResult {
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub partition: Vec<Vec<(usize, f64)>>,
    /// Largest number of balls containing one grid node.
    pub overlap: usize,
    #[serde(skip)]
    pub grid: Grid,
    #[serde(skip)]
    pub box_nodes: Vec<usize>,
}

impl CoveringResult {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn psi(&self, xi: usize) -> GridFunction {
        let mut f = GridFunction::zeros(self.grid.clone());
        for &(i, v) in &self.partition[xi] {
            f.values[i] = v;
        }
        f
    }

    /// `max |Σ_ξ ψ_ξ - 1|` over the box nodes.
    pub fn partition_error(&self) -> f64 {
        let mut sum = vec![0.0; self.grid.len()];
        for part in &self.partition {
            for &(i, v) in part {
                sum[i] += v;
            }
        }
        self.box_nodes
            .iter()
            .map(|&i| (sum[i] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Whether the balls `B(x_ξ, ρ(x_ξ)/5)` are pairwise disjoint.
    pub fn fifth_balls_disjoint(&self) -> bool {
        (0..self.len()).all(|a| {
            (a + 1..self.len()).all(|b| {
                dist(&self.centers[a], &self.centers[b]) > (self.radii[a] + self.radii[b]) / 5.0
            })
        })
    }

    /// Whether every `ψ_ξ` lies in `[0, 1]` and vanishes off its ball.
    pub fn supports_ok(&self) -> bool {
        self.partition.iter().enumerate().all(|(xi, part)| {
            let ball = Ball {
                center: self.centers[xi].clone(),
                radius: self.radii[xi],
            };
            part.iter()
                .all(|&(i, v)| (0.0..=1.0).contains(&v) && ball.contains(&self.grid.node(i)))
        })
    }
}

/// Greedy Vitali selection among the grid nodes in the box, by decreasing
/// `ρ` (lowest index first on ties): a node is kept when its fifth-ball
/// misses every kept fifth-ball. A rejected node `x` lies within
/// `(ρ(x) + ρ(x_ξ))/5 < ρ(x_ξ)` of a kept center, so the full balls cover
/// every node. Then `ψ_ξ = χ_{B_ξ} / Σ_θ χ_{B_θ}`.
pub fn vitali_covering(domain_box: &BoxDomain, grid: &Grid) -> Result<CoveringResult> {
    if domain_box.dim() != grid.dim() {
        return Err(Error::GridMismatch("box and grid dimensions differ".into()));
    }
    let box_nodes: Vec<usize> = (0..grid.len())
        .filter(|&i| domain_box.contains(&grid.node(i)))
        .collect();
    if box_nodes.is_empty() {
        return Err(domain("no grid nodes inside the box"));
    }
    let rho: Vec<f64> = box_nodes
        .iter()
        .map(|&i| critical_function(&grid.node(i)))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..box_nodes.len()).collect();
    order.sort_by(|&a, &b| rho[b].total_cmp(&rho[a]));

    let mut centers: Vec<Vec<f64>> = Vec::new();
    let mut radii: Vec<f64> = Vec::new();
    for &k in &order {
        let x = grid.node(box_nodes[k]);
        let free = centers
            .iter()
            .zip(&radii)
            .all(|(c, r)| dist(c, &x) > (r + rho[k]) / 5.0);
        if free {
            centers.push(x);
            radii.push(rho[k]);
        }
    }

    let mut count = vec![0usize; grid.len()];
    let members: Vec<Vec<usize>> = centers
        .iter()
        .zip(&radii)
        .map(|(c, &r)| {
            let ball = Ball {
                center: c.clone(),
                radius: r,
            };
            nodes_in_ball(grid, &ball)
                .into_iter()
                .filter(|&i| domain_box.contains(&grid.node(i)))
                .collect::<Vec<_>>()
        })
        .collect();
    for m in &members {
        for &i in m {
            count[i] += 1;
        }
    }
    if let Some(&i) = box_nodes.iter().find(|&&i| count[i] == 0) {
        return Err(domain(format!("node {:?} left uncovered", grid.node(i))));
    }
    let overlap = box_nodes.iter().map(|&i| count[i]).max().unwrap_or(0);
    let partition = members
        .into_iter()
        .map(|m| m.into_iter().map(|i| (i, 1.0 / count[i] as f64)).collect())
        .collect();
    Ok(CoveringResult {
        centers,
        radii,
        partition,
        overlap,
        grid: grid.clone(),
        box_nodes,
    })
}
