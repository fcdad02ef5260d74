//! Sampled estimates of the local Campanato norm `BMO^{s,M}_ρ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::poly::minimizing_polynomial;
use super::{critical_function, nodes_in_ball, Ball};
use crate::error::{domain, Error, Result};
use crate::grid::{Grid, GridFunction};

/// Which side of the critical scale a sampler keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Branches {
    #[default]
    Both,
    /// `r_B < ρ(x_B)` only.
    Small,
    /// `r_B ≥ ρ(x_B)` only.
    Large,
}

impl Branches {
    fn keeps(self, ball: &Ball) -> bool {
        let small = critical_function(&ball.center).is_ok_and(|rho| ball.radius < rho);
        match self {
            Branches::Both => true,
            Branches::Small => small,
            Branches::Large => !small,
        }
    }
}

/// Finite family of balls standing in for the suprema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSampler {
    pub balls: Vec<Ball>,
}

impl BallSampler {
    pub fn from_balls(balls: Vec<Ball>) -> Self {
        Self { balls }
    }

    /// Centers on every `stride`-th grid node per axis (with `centers_per_axis`
    /// of them), radii log-spaced over `[2h, diam]` with `h` the local grid
    /// spacing, plus `ρ/2` and `ρ` at each center so both branches are hit.
    pub fn stratified(
        grid: &Grid,
        centers_per_axis: usize,
        radii: usize,
        branches: Branches,
    ) -> Result<Self> {
        if centers_per_axis == 0 || radii < 2 {
            return Err(domain(
                "sampler needs at least one center per axis and two radii",
            ));
        }
        let diam = grid
            .axes
            .iter()
            .map(|a| (a.hi - a.lo).powi(2))
            .sum::<f64>()
            .sqrt();
        let per_axis: Vec<Vec<usize>> = grid
            .axes
            .iter()
            .map(|a| {
                let m = centers_per_axis.min(a.len());
                // strata midpoints, so the extreme nodes are not favoured
                (0..m).map(|i| ((2 * i + 1) * a.len()) / (2 * m)).collect()
            })
            .collect();
        let mut balls = Vec::new();
        let mut idx = vec![0; per_axis.len()];
        loop {
            let center: Vec<f64> = idx
                .iter()
                .enumerate()
                .map(|(j, &i)| grid.axes[j].nodes[per_axis[j][i]])
                .collect();
            let h = grid
                .axes
                .iter()
                .zip(&center)
                .map(|(a, &c)| a.max_spacing_in(c, c))
                .fold(0.0, f64::max);
            let lo = 2.0 * h;
            if lo < diam {
                for i in 0..radii {
                    let r = lo * (diam / lo).powf(i as f64 / (radii - 1) as f64);
                    balls.push(Ball::new(center.clone(), r)?);
                }
            }
            let rho = critical_function(&center)?;
            balls.push(Ball::new(center.clone(), 0.5 * rho)?);
            balls.push(Ball::new(center, rho)?);

            let mut j = idx.len();
            loop {
                if j == 0 {
                    balls.retain(|b| branches.keeps(b));
                    return Ok(Self { balls });
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < per_axis[j].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmoEstimate {
    /// Sum of the two branch suprema.
    pub value: f64,
    pub small_sup: f64,
    pub large_sup: f64,
    pub small_balls: usize,
    pub large_balls: usize,
    /// Balls skipped because the grid does not resolve them.
    pub skipped: usize,
    /// Balls reaching outside the grid box, averaged over the part inside.
    pub clipped: usize,
    pub worst_small: Option<Ball>,
    pub worst_large: Option<Ball>,
    pub warnings: Vec<String>,
}

enum Outcome {
    Small(f64),
    Large(f64),
    Skipped(String),
}

fn leaves_box(grid: &Grid, b: &Ball) -> bool {
    grid.axes
        .iter()
        .zip(&b.center)
        .any(|(a, &c)| c - b.radius < a.lo || c + b.radius > a.hi)
}

fn ball_term(f: &GridFunction, s: f64, m: u32, b: &Ball) -> Result<Outcome> {
    let nodes = nodes_in_ball(&f.grid, b);
    if nodes.is_empty() {
        return Ok(Outcome::Skipped(format!(
            "no grid nodes in ball at {:?}",
            b.center
        )));
    }
    let scale = b.volume().powf(-s / b.dim() as f64);
    let rho = critical_function(&b.center)?;
    let small = b.radius < rho;
    let poly = if small {
        match minimizing_polynomial(f, b, m) {
            Ok(p) => Some(p),
            Err(Error::IllConditioned(msg)) => return Ok(Outcome::Skipped(msg)),
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let (mut sq, mut meas) = (0.0, 0.0);
    for &i in &nodes {
        let w = f.grid.weight(i);
        let d = match &poly {
            Some(p) => f.values[i] - p.eval(&f.grid.node(i)),
            None => f.values[i],
        };
        sq += w * d * d;
        meas += w;
    }
    let v = scale * (sq / meas).sqrt();
    Ok(if small {
        Outcome::Small(v)
    } else {
        Outcome::Large(v)
    })
}

/// `sup_{r_B < ρ} |B|^{-s/n} (⨍_B |f - P_B^M f|²)^{1/2} + sup_{r_B ≥ ρ}
/// |B|^{-s/n} (⨍_B |f|²)^{1/2}` over the sampled balls.
///
/// Averages run over the grid nodes in `B`, so balls leaving the grid box are
/// clipped to it (and counted). Balls the grid cannot resolve are skipped.
pub fn bmo_norm(f: &GridFunction, s: f64, m: u32, sampler: &BallSampler) -> Result<BmoEstimate> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(domain(format!("smoothness must be nonnegative, got {s}")));
    }
    if f64::from(m) < s.floor() {
        return Err(domain(format!("degree {m} is below ⌊s⌋ = {}", s.floor())));
    }
    if let Some(b) = sampler.balls.iter().find(|b| b.dim() != f.grid.dim()) {
        return Err(Error::GridMismatch(format!(
            "ball of dimension {} on a {}-d grid",
            b.dim(),
            f.grid.dim()
        )));
    }
    let outcomes: Vec<Result<Outcome>> = sampler
        .balls
        .par_iter()
        .map(|b| ball_term(f, s, m, b))
        .collect();
    let mut est = BmoEstimate {
        value: 0.0,
        small_sup: 0.0,
        large_sup: 0.0,
        small_balls: 0,
        large_balls: 0,
        skipped: 0,
        clipped: 0,
        worst_small: None,
        worst_large: None,
        warnings: Vec::new(),
    };
    let mut first_skip = None;
    for (b, o) in sampler.balls.iter().zip(outcomes) {
        match o? {
            Outcome::Small(v) => {
                est.small_balls += 1;
                if est.worst_small.is_none() || v > est.small_sup {
                    est.small_sup = v;
                    est.worst_small = Some(b.clone());
                }
            }
            Outcome::Large(v) => {
                est.large_balls += 1;
                if est.worst_large.is_none() || v > est.large_sup {
                    est.large_sup = v;
                    est.worst_large = Some(b.clone());
                }
            }
            Outcome::Skipped(msg) => {
                est.skipped += 1;
                first_skip.get_or_insert(msg);
                continue;
            }
        }
        if leaves_box(&f.grid, b) {
            est.clipped += 1;
        }
    }
    if let Some(msg) = first_skip {
        est.warnings.push(format!(
            "{} under-resolved balls skipped (first: {msg})",
            est.skipped
        ));
    }
    if est.clipped > 0 {
        est.warnings
            .push(format!("{} balls clipped to the grid box", est.clipped));
    }
    est.value = est.small_sup + est.large_sup;
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Spacing;

    #[test]
    fn constants_only_see_the_large_branch() {
        let g = Grid::cube(Spacing::Uniform, 4.0, 8.0, 161, 1).unwrap();
        let one = GridFunction::from_fn(g.clone(), |_| 1.0);
        let small = BallSampler::stratified(&g, 8, 6, Branches::Small).unwrap();
        assert!(!small.balls.is_empty());
        let e = bmo_norm(&one, 0.0, 0, &small).unwrap();
        assert!(e.value < 1e-9, "{e:?}");

        let mut both = small.clone();
        both.balls.push(Ball::new(vec![6.0], 1.0).unwrap());
        let e = bmo_norm(&one, 0.0, 0, &both).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        assert_eq!(e.large_balls, 1);
    }

    #[test]
    fn stratified_sampler_hits_both_branches() {
        let g = Grid::cube(Spacing::Logarithmic, 0.5, 8.0, 40, 2).unwrap();
        let s = BallSampler::stratified(&g, 3, 4, Branches::Both).unwrap();
        let small = s
            .balls
            .iter()
            .filter(|b| b.radius < critical_function(&b.center).unwrap())
            .count();
        assert!(small > 0 && small < s.balls.len());
    }

    #[test]
    fn degree_must_cover_smoothness() {
        let g = Grid::cube(Spacing::Uniform, 1.0, 2.0, 11, 1).unwrap();
        let f = GridFunction::zeros(g.clone());
        let s = BallSampler::from_balls(vec![]);
        assert!(bmo_norm(&f, 1.5, 0, &s).is_err());
    }
}
