//! Sampling engine shared by the pointwise campaigns.
//!
//! A campaign is an [`Objective`]: a map from `θ ∈ [0, 1]^D` to a sample with
//! one ratio per column (or `None` when `θ` is inadmissible). Level
//! `r` draws nested random sets, then polishes the current worst samples of
//! every column with a compass search in `θ`. The polished points are appended
//! after the random ones, so constants are maxima over nested sets and the
//! fitting rule of [`crate::report::fit_constants`] applies unchanged.
//!
//! Levels also grow the domain: level `r` of `L` keeps only points whose
//! ranges survive `L - 1 - r` halvings ([`Objective::depth`]). On a fixed
//! compact domain every continuous ratio is bounded, so a constant that only
//! exists because of the box would otherwise look stable.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::report::Sample;
use crate::sampling::rng;

/// One evaluated point: coordinates and, per column, `lhs`, `rhs` and their
/// ratio. Columns are Gaussian rates, or separate inequalities sharing the
/// same points.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub t: Option<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub y_prime: Option<Vec<f64>>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `lhs / rhs` per column, computed without underflow by the objective.
    pub ratios: Vec<f64>,
    pub warning: bool,
}

impl Evaluation {
    pub fn sample(&self, col: usize) -> Sample {
        Sample {
            t: self.t,
            x: self.x.clone(),
            y: self.y.clone(),
            y_prime: self.y_prime.clone(),
            lhs: self.lhs[col],
            rhs: self.rhs[col],
            ratio: self.ratios[col],
        }
    }
}

pub trait Objective: Sync {
    /// Dimension of the parameter cube.
    fn dim(&self) -> usize;
    /// Number of columns each evaluation reports.
    fn columns(&self) -> usize;
    fn eval(&self, theta: &[f64]) -> Result<Option<Evaluation>>;
    /// Number of halvings of the sampled ranges that still contain `θ` (see
    /// [`log_depth`]). Level `r` of `L` only uses points of depth at least
    /// `L - 1 - r`, so coarser levels sample smaller domains.
    fn depth(&self, _theta: &[f64]) -> u32 {
        u32::MAX
    }
}

/// Compass-search settings for the worst-sample refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolishConfig {
    /// Worst samples refined per column and level; 0 disables polishing.
    pub starts: usize,
    /// Evaluations allowed per start.
    pub budget: usize,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for PolishConfig {
    fn default() -> Self {
        Self {
            starts: 4,
            budget: 1500,
            initial_step: 0.05,
            min_step: 1e-4,
        }
    }
}

/// All evaluations in level order plus the cumulative count after each
/// level.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub evals: Vec<Evaluation>,
    pub level_ends: Vec<usize>,
}

impl Sweep {
    pub fn ratios(&self) -> Vec<Vec<f64>> {
        self.evals.iter().map(|e| e.ratios.clone()).collect()
    }

    /// Ratios of one column, as single-col rows for `fit_constants`.
    pub fn column(&self, col: usize) -> Vec<Vec<f64>> {
        self.evals.iter().map(|e| vec![e.ratios[col]]).collect()
    }

    pub fn warnings(&self) -> usize {
        self.evals.iter().filter(|e| e.warning).count()
    }
}

const MAX_REJECTION_ROUNDS: usize = 200;

fn ratio_key(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Appends `count` admissible random points of depth at least `depth`.
/// Draws happen in batches on one stream and are evaluated in parallel;
/// admissible results are kept in draw order, so the outcome does not depend
/// on the thread count.
fn draw<O: Objective>(
    obj: &O,
    r: &mut crate::sampling::SampleRng,
    count: usize,
    depth: u32,
    thetas: &mut Vec<Vec<f64>>,
    evals: &mut Vec<Evaluation>,
) -> Result<()> {
    let mut kept = 0;
    for _ in 0..MAX_REJECTION_ROUNDS {
        if kept >= count {
            return Ok(());
        }
        let need = count - kept;
        let mut batch: Vec<Vec<f64>> = Vec::with_capacity(need + need / 4 + 8);
        while batch.len() < need + need / 4 + 8 {
            let th: Vec<f64> = (0..obj.dim()).map(|_| r.random::<f64>()).collect();
            if obj.depth(&th) >= depth {
                batch.push(th);
            }
        }
        let results: Vec<Result<Option<Evaluation>>> =
            batch.par_iter().map(|th| obj.eval(th)).collect();
        for (th, res) in batch.into_iter().zip(results) {
            if kept >= count {
                break;
            }
            if let Some(e) = res? {
                thetas.push(th);
                evals.push(e);
                kept += 1;
            }
        }
    }
    if kept < count {
        return Err(domain(
            "admissible region too small to draw the requested samples",
        ));
    }
    Ok(())
}

/// Compass search maximising the ratio of `col` from `start`.
fn polish<O: Objective>(
    obj: &O,
    cfg: &PolishConfig,
    col: usize,
    depth: u32,
    start: (Vec<f64>, Evaluation),
) -> Result<(Vec<f64>, Evaluation)> {
    let (mut theta, mut best) = start;
    let mut step = cfg.initial_step;
    let mut used = 0;
    while step >= cfg.min_step && used < cfg.budget {
        let trials: Vec<Vec<f64>> = (0..theta.len())
            .flat_map(|j| [-1.0, 1.0].map(|s| (j, s)))
            .map(|(j, s)| {
                let mut th = theta.clone();
                th[j] = (th[j] + s * step).clamp(0.0, 1.0);
                th
            })
            .filter(|th| obj.depth(th) >= depth)
            .collect();
        if trials.is_empty() {
            step *= 0.5;
            continue;
        }
        used += trials.len();
        let results: Vec<Result<Option<Evaluation>>> =
            trials.par_iter().map(|th| obj.eval(th)).collect();
        let mut improved = None;
        let mut top = ratio_key(best.ratios[col]);
        for (i, res) in results.into_iter().enumerate() {
            if let Some(e) = res? {
                let v = ratio_key(e.ratios[col]);
                if v > top {
                    top = v;
                    improved = Some((i, e));
                }
            }
        }
        match improved {
            Some((i, e)) => {
                theta = trials[i].clone();
                best = e;
                if top.is_infinite() {
                    break;
                }
            }
            None => step *= 0.5,
        }
    }
    Ok((theta, best))
}

/// Runs a campaign with `per_level[r]` random samples at level `r`
/// (cumulative counts, increasing).
pub fn sweep<O: Objective>(
    obj: &O,
    seed: u64,
    per_level: &[usize],
    polish_cfg: &PolishConfig,
) -> Result<Sweep> {
    if per_level.is_empty() || per_level.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain("sample counts per level must be nondecreasing"));
    }
    let mut r = rng(seed);
    let mut thetas = Vec::new();
    let mut evals = Vec::new();
    let mut level_ends = Vec::with_capacity(per_level.len());
    let mut drawn = 0;
    let levels = per_level.len() as u32;
    for (level, &target) in per_level.iter().enumerate() {
        let depth = levels - 1 - level as u32;
        draw(obj, &mut r, target - drawn, depth, &mut thetas, &mut evals)?;
        drawn = target;
        if polish_cfg.starts > 0 {
            let mut new_points = Vec::new();
            for col in 0..obj.columns() {
                let mut order: Vec<usize> = (0..evals.len()).collect();
                // stable sort keeps the lowest index first among ties
                order.sort_by(|&a, &b| {
                    ratio_key(evals[b].ratios[col]).total_cmp(&ratio_key(evals[a].ratios[col]))
                });
                for &i in order.iter().take(polish_cfg.starts) {
                    if !ratio_key(evals[i].ratios[col]).is_finite() {
                        continue;
                    }
                    let start = (thetas[i].clone(), evals[i].clone());
                    new_points.push(polish(obj, polish_cfg, col, depth, start)?);
                }
            }
            for (th, e) in new_points {
                thetas.push(th);
                evals.push(e);
            }
        }
        level_ends.push(evals.len());
    }
    Ok(Sweep { evals, level_ends })
}

/// Random-sample counts per level: the finest level has `samples` and each
/// coarser level half as many.
pub fn level_counts(samples: usize, levels: u32) -> Vec<usize> {
    (0..levels)
        .map(|r| samples.div_ceil(1 << (levels - 1 - r)))
        .collect()
}

/// How many times `[lo, hi]` can be shrunk by a factor 2 at both ends (in
/// the log-uniform parameterisation) and still contain the image of `u`.
pub fn log_depth(u: f64, lo: f64, hi: f64) -> u32 {
    let margin = std::f64::consts::LN_2 / (hi / lo).ln();
    let d = (u.min(1.0 - u) / margin).floor();
    if d >= f64::from(u32::MAX) {
        u32::MAX
    } else {
        d.max(0.0) as u32
    }
}

/// Maps `u ∈ [0, 1]` log-uniformly onto `[lo, hi]`.
pub fn log_map(u: f64, lo: f64, hi: f64) -> f64 {
    (lo.ln() + u * (hi / lo).ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Ratio `θ_0 (1 - θ_0)`, inadmissible for `θ_1 > 0.9`.
    struct Bump;

    impl Objective for Bump {
        fn dim(&self) -> usize {
            2
        }
        fn columns(&self) -> usize {
            1
        }
        fn eval(&self, th: &[f64]) -> Result<Option<Evaluation>> {
            if th[1] > 0.9 {
                return Ok(None);
            }
            let v = th[0] * (1.0 - th[0]);
            Ok(Some(Evaluation {
                t: None,
                x: vec![th[0]],
                y: vec![th[1]],
                y_prime: None,
                lhs: vec![v],
                rhs: vec![1.0],
                ratios: vec![v],
                warning: false,
            }))
        }
    }

    #[test]
    fn polishing_reaches_the_maximum() {
        let s = sweep(&Bump, 3, &[10, 20], &PolishConfig::default()).unwrap();
        assert_eq!(s.level_ends, vec![14, 28]);
        let best = s.evals[..14]
            .iter()
            .map(|e| e.ratios[0])
            .fold(0.0, f64::max);
        assert!((best - 0.25).abs() < 1e-7, "{best}");
        assert!(s.evals.iter().all(|e| e.y[0] <= 0.9));
    }

    #[test]
    fn deterministic_and_nested() {
        let cfg = PolishConfig {
            starts: 0,
            ..PolishConfig::default()
        };
        let a = sweep(&Bump, 9, &[5, 10], &cfg).unwrap();
        let b = sweep(&Bump, 9, &[5, 10], &cfg).unwrap();
        assert_eq!(a.evals, b.evals);
        let c = sweep(&Bump, 9, &[5], &cfg).unwrap();
        assert_eq!(c.evals[..], a.evals[..5]);
    }
}
