//! Operator-level spot checks: Riesz transforms on atoms (Hardy), on a
//! corpus of bounded functions (Campanato), and differences of Riesz
//! transforms of neighbouring orders (Lebesgue).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::engine::level_counts;
use super::{CampaignConfig, GridSpec};
use crate::error::{domain, Error, Result};
use crate::grid::{lp_norm, maximal_function_many, Grid, GridFunction};
use crate::heat::NuVector;
use crate::report::{relative_drift, BoundReport, Verdict, STABLE_DRIFT};
use crate::riesz::{riesz_apply_many, MultiIndex, SubordinationPlan};
use crate::sampling::{log_uniform, rng, SampleRng};
use crate::spaces::{
    bmo_norm, critical_function, minimizing_polynomial, validate_p_rho_atom, AtomCandidate,
    AtomOptions, Ball, BallSampler, Branches,
};

fn build_grid(spec: &GridSpec, n: usize, nodes: usize) -> Result<Grid> {
    Grid::cube(spec.spacing, spec.lo, spec.hi, nodes, n)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.is_empty() {
        f64::NAN
    } else if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// `R f` for every input, with `k = 0` read as the identity.
fn riesz_or_identity(
    nu: &NuVector,
    k: &[u32],
    fs: &[GridFunction],
    plan: &SubordinationPlan,
) -> Result<Vec<GridFunction>> {
    if k.iter().all(|&v| v == 0) {
        return Ok(fs.to_vec());
    }
    riesz_apply_many(nu, &MultiIndex::new(k.to_vec())?, fs, plan)
}

/// Times for the maximal function: log-spaced from the squared smallest grid
/// spacing to the squared box size.
fn maximal_times(grid: &Grid, per_decade: u32) -> Vec<f64> {
    let h = grid.min_spacing();
    let size = grid.axes.iter().map(|a| a.hi).fold(0.0, f64::max);
    let (a, b) = ((h * h).log10(), (size * size).log10());
    let m = ((b - a) * f64::from(per_decade)).ceil().max(1.0) as usize;
    (0..=m)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / m as f64))
        .collect()
}

/// Set-up for [`hardy_spot_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardySpotConfig {
    pub nu: Vec<f64>,
    pub k: Vec<u32>,
    pub p: f64,
    /// The maximal function uses `ν + k + 2(M, …, M)`.
    pub m: u32,
    pub atoms: usize,
    pub seed: u64,
    pub grid: GridSpec,
    #[serde(default)]
    pub plan: SubordinationPlan,
    /// Maximal-function times per decade.
    #[serde(default = "default_times_per_decade")]
    pub times_per_decade: u32,
}

fn default_times_per_decade() -> u32 {
    3
}

/// One random atom, enough to rebuild it on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Whether moments were removed (`r < ρ`).
    pub cancelling: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardySpotReport {
    /// `‖M(R a)‖_p^p` per atom, in draw order.
    pub norms: Vec<f64>,
    pub max: f64,
    pub median: f64,
    pub max_over_median: f64,
    pub uniform: bool,
    pub worst: AtomRecord,
    pub atoms: Vec<AtomRecord>,
    pub warnings: Vec<String>,
}

/// Largest `max/median` accepted as a uniform bound.
pub const UNIFORM_RATIO: f64 = 10.0;

/// Fewest grid nodes per axis an atom's ball must hold.
const MIN_ATOM_NODES: usize = 4;

fn nodes_across(grid: &Grid, ball: &Ball) -> usize {
    grid.axes
        .iter()
        .zip(&ball.center)
        .map(|(a, &c)| {
            a.nodes
                .iter()
                .filter(|&&v| (v - c).abs() <= ball.radius)
                .count()
        })
        .min()
        .unwrap_or(0)
}

/// Draws a `(p, ρ)`-atom: centre log-uniform in the inner part of the box,
/// radius `2^u ρ(x_0)` with `u ∈ [-2, 2]`. Large balls carry
/// `|B|^{-1/p} χ_B`; small ones an odd profile with its low moments removed
/// by the minimizing polynomial, rescaled to the size bound.
fn draw_atom(r: &mut SampleRng, grid: &Grid, p: f64) -> Result<(GridFunction, AtomRecord)> {
    let n = grid.dim();
    let omega = (n as f64 * (1.0 / p - 1.0) + 1e-12).floor() as u32;
    for _ in 0..1000 {
        let center: Vec<f64> = grid
            .axes
            .iter()
            .map(|a| log_uniform(r, 2.0 * a.lo, 0.5 * a.hi))
            .collect();
        let rho = critical_function(&center)?;
        let radius = rho * 2f64.powf(r.random_range(-2.0..=2.0));
        let ball = Ball::new(center.clone(), radius)?;
        if nodes_across(grid, &ball) < MIN_ATOM_NODES {
            continue;
        }
        let cancelling = radius < rho;
        let dir: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..=1.0)).collect();
        let mut f = GridFunction::from_fn(grid.clone(), |x| {
            if !ball.contains(x) {
                return 0.0;
            }
            if !cancelling {
                return 1.0;
            }
            let s: f64 = x
                .iter()
                .zip(&center)
                .zip(&dir)
                .map(|((a, c), d)| (a - c) * d)
                .sum();
            (s / radius).tanh() + 0.5 * (s / radius).powi(2)
        });
        if cancelling {
            let poly = minimizing_polynomial(&f, &ball, omega)?;
            let g = f.grid.clone();
            for i in 0..g.len() {
                let x = g.node(i);
                if ball.contains(&x) {
                    f.values[i] -= poly.eval(&x);
                }
            }
        }
        let sup = f.sup_norm();
        if !(sup > 0.0) {
            continue;
        }
        let scale = ball.volume().powf(-1.0 / p) / sup;
        let f = f.map(|v| v * scale);
        let cand = AtomCandidate { f, ball, p };
        let verdict = validate_p_rho_atom(&cand, &AtomOptions::default())?;
        if !verdict.verdict.passed() {
            return Err(domain(format!(
                "generated atom failed validation: {:?}",
                verdict.messages
            )));
        }
        return Ok((
            cand.f,
            AtomRecord {
                center,
                radius,
                cancelling,
            },
        ));
    }
    Err(domain("could not draw a resolved atom; refine the grid"))
}

/// `‖M_{Δ_{ν'}}(δ^k_ν Δ_ν^{-|k|/2} a)‖_p^p` over random atoms, with
/// `ν' = ν + k + 2(M, …, M)`. A uniform bound shows up as a bounded
/// `max/median`.
pub fn hardy_spot_check(cfg: &HardySpotConfig) -> Result<HardySpotReport> {
    let n = cfg.nu.len();
    let nu = NuVector::new(cfg.nu.clone())?;
    if cfg.k.len() != n {
        return Err(domain("k and nu dimensions differ"));
    }
    let lower = n as f64 / (n as f64 + nu.gamma());
    if !(cfg.p > lower && cfg.p <= 1.0) {
        return Err(domain(format!("p = {} outside ({lower}, 1]", cfg.p)));
    }
    if cfg.atoms == 0 {
        return Err(domain("need at least one atom"));
    }
    let grid = build_grid(&cfg.grid, n, cfg.grid.nodes)?;
    let mut r = rng(cfg.seed);
    let mut fs = Vec::with_capacity(cfg.atoms);
    let mut atoms = Vec::with_capacity(cfg.atoms);
    for _ in 0..cfg.atoms {
        let (f, rec) = draw_atom(&mut r, &grid, cfg.p)?;
        fs.push(f);
        atoms.push(rec);
    }
    let ra = riesz_or_identity(&nu, &cfg.k, &fs, &cfg.plan)?;
    let shift: Vec<f64> = cfg.k.iter().map(|&k| f64::from(k + 2 * cfg.m)).collect();
    let nu_max = nu.shifted(&shift)?;
    let times = maximal_times(&grid, cfg.times_per_decade);
    let mf = maximal_function_many(&nu_max, &ra, &times)?;
    let norms = mf
        .iter()
        .map(|g| Ok(lp_norm(g, cfg.p)?.powf(cfg.p)))
        .collect::<Result<Vec<f64>>>()?;
    let (mut worst, mut max) = (0, f64::NEG_INFINITY);
    for (i, &v) in norms.iter().enumerate() {
        if v > max {
            max = v;
            worst = i;
        }
    }
    let med = median(&norms);
    let ratio = max / med;
    let mut warnings = Vec::new();
    if !norms.iter().all(|v| v.is_finite()) {
        warnings.push("non-finite quasi-norms".into());
    }
    Ok(HardySpotReport {
        max,
        median: med,
        max_over_median: ratio,
        uniform: ratio <= UNIFORM_RATIO,
        worst: atoms[worst].clone(),
        norms,
        atoms,
        warnings,
    })
}

/// Set-up for [`bmo_spot_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmoSpotConfig {
    pub nu: Vec<f64>,
    pub k: Vec<u32>,
    /// Campanato smoothness `s` and polynomial degree `M ≥ ⌊s⌋`.
    pub s: f64,
    pub m: u32,
    #[serde(default)]
    pub plan: SubordinationPlan,
    /// Sampler density: centers per axis and radii per center.
    pub centers: usize,
    pub radii: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmoSpotReport {
    /// `bmo(R f) / bmo(f)` per corpus entry; `None` where `bmo(f) = 0`.
    pub ratios: Vec<Option<f64>>,
    pub max: f64,
    pub skipped: usize,
    pub warnings: Vec<String>,
}

/// Bounded, compactly supported test functions: bumps, plateaus and
/// oscillating packets at random places and scales inside the grid box.
pub fn random_corpus(grid: &Grid, count: usize, seed: u64) -> Vec<GridFunction> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let center: Vec<f64> = grid
                .axes
                .iter()
                .map(|a| r.random_range(a.lo + 0.2 * (a.hi - a.lo)..=a.hi - 0.2 * (a.hi - a.lo)))
                .collect();
            let width: f64 = grid
                .axes
                .iter()
                .map(|a| (a.hi - a.lo) * r.random_range(0.05..=0.2))
                .fold(f64::INFINITY, f64::min);
            let freq = r.random_range(1.0..=6.0);
            let amp = r.random_range(0.5..=2.0);
            GridFunction::from_fn(grid.clone(), |x| {
                let d = crate::spaces::dist(x, &center) / width;
                if d >= 1.0 {
                    return 0.0;
                }
                amp * match i % 3 {
                    0 => (1.0 - d * d).powi(2),
                    1 => 1.0,
                    _ => (1.0 - d * d) * (freq * (x[0] - center[0]) / width).sin(),
                }
            })
        })
        .collect()
}

/// `bmo(R f) / bmo(f)` over a corpus with the stratified sampler.
pub fn bmo_spot_check(cfg: &BmoSpotConfig, corpus: &[GridFunction]) -> Result<BmoSpotReport> {
    let Some(first) = corpus.first() else {
        return Err(domain("empty corpus"));
    };
    let nu = NuVector::new(cfg.nu.clone())?;
    let sampler = BallSampler::stratified(&first.grid, cfg.centers, cfg.radii, Branches::Both)?;
    let rf = riesz_or_identity(&nu, &cfg.k, corpus, &cfg.plan)?;
    let mut ratios = Vec::with_capacity(corpus.len());
    let mut warnings = Vec::new();
    let mut skipped = 0;
    for (f, g) in corpus.iter().zip(&rf) {
        let below = bmo_norm(f, cfg.s, cfg.m, &sampler)?;
        if below.value == 0.0 {
            ratios.push(None);
            continue;
        }
        let above = bmo_norm(g, cfg.s, cfg.m, &sampler)?;
        skipped += below.skipped + above.skipped;
        ratios.push(Some(above.value / below.value));
    }
    if skipped > 0 {
        warnings.push(format!("{skipped} under-resolved balls skipped"));
    }
    let max = ratios.iter().flatten().copied().fold(0.0, f64::max);
    Ok(BmoSpotReport {
        ratios,
        max,
        skipped,
        warnings,
    })
}

fn operator_report(
    config: &CampaignConfig,
    per_level: Vec<f64>,
    extra: serde_json::Value,
    verdict_if_stable: bool,
    warnings: Vec<String>,
) -> BoundReport {
    let drift = relative_drift(&per_level);
    let finite = per_level.last().is_some_and(|v| v.is_finite());
    let verdict = if !finite {
        Verdict::Violated
    } else if verdict_if_stable && drift < STABLE_DRIFT {
        Verdict::Stable
    } else {
        Verdict::Unstable
    };
    let mut params = serde_json::to_value(config).expect("configs serialise");
    if let (Some(obj), serde_json::Value::Object(more)) = (params.as_object_mut(), extra) {
        obj.extend(more);
    }
    BoundReport {
        id: config.id.to_string(),
        params,
        c_hat: *per_level.last().unwrap_or(&f64::NAN),
        rate_hat: None,
        worst_sample: None,
        refinement_c: per_level,
        refinement_delta: drift,
        verdict,
        warnings,
    }
}

/// Hardy check as a campaign: levels are nested atom sets (the finest holds
/// `samples` atoms) and the constant is the largest quasi-norm. Stable needs
/// both the `max/median` bound and the drift rule.
pub(crate) fn hardy_campaign(config: &CampaignConfig) -> Result<BoundReport> {
    let cfg = HardySpotConfig {
        nu: config.nu.clone(),
        k: config.k.clone(),
        p: config.p.unwrap_or(1.0),
        m: config.m,
        atoms: config.samples,
        seed: config.seed,
        grid: config.grid.clone(),
        plan: config.plan.clone(),
        times_per_decade: default_times_per_decade(),
    };
    let rep = hardy_spot_check(&cfg)?;
    let per_level = level_counts(config.samples, config.levels)
        .iter()
        .map(|&c| rep.norms[..c].iter().copied().fold(0.0, f64::max))
        .collect();
    let extra = serde_json::json!({
        "max_over_median": rep.max_over_median,
        "worst_atom": rep.worst,
    });
    Ok(operator_report(
        config,
        per_level,
        extra,
        rep.uniform,
        rep.warnings,
    ))
}

/// Campanato check as a campaign: levels refine the grid (node count doubling
/// per level) on the same corpus; the constant is the largest ratio.
pub(crate) fn bmo_campaign(config: &CampaignConfig) -> Result<BoundReport> {
    let n = config.dim();
    let spot = BmoSpotConfig {
        nu: config.nu.clone(),
        k: config.k.clone(),
        s: config.s,
        m: config.s.floor() as u32,
        plan: config.plan.clone(),
        centers: 16,
        radii: 8,
    };
    let mut per_level = Vec::new();
    let mut warnings = Vec::new();
    for level in 0..config.levels {
        let grid = build_grid(&config.grid, n, config.grid.nodes << level)?;
        let corpus = random_corpus(&grid, config.samples, config.seed);
        let rep = bmo_spot_check(&spot, &corpus)?;
        per_level.push(rep.max);
        warnings.extend(rep.warnings);
    }
    warnings.push("advisory: the ball sampler stands in for the suprema".into());
    Ok(operator_report(
        config,
        per_level,
        serde_json::json!({}),
        true,
        warnings,
    ))
}

/// Smooth bumps `± exp(-|x - c|²/2σ²)` with log-uniform centres and widths
/// proportional to the centre.
fn gaussian_bumps(grid: &Grid, count: usize, seed: u64) -> Vec<GridFunction> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let center: Vec<f64> = grid
                .axes
                .iter()
                .map(|a| log_uniform(&mut r, 4.0 * a.lo, 0.25 * a.hi))
                .collect();
            let sigma: Vec<f64> = center
                .iter()
                .map(|c| c * log_uniform(&mut r, 0.03, 0.3))
                .collect();
            let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
            GridFunction::from_fn(grid.clone(), |x| {
                let e: f64 = x
                    .iter()
                    .zip(&center)
                    .zip(&sigma)
                    .map(|((a, c), s)| ((a - c) / s).powi(2))
                    .sum();
                sign * (-0.5 * e).exp()
            })
        })
        .collect()
}

/// `‖(R_ν - R_{ν+e_j}) f‖_p / ‖f‖_p` over Gaussian bumps, levels refining the
/// grid. The constant is the largest ratio per level.
pub(crate) fn order_difference_campaign(config: &CampaignConfig) -> Result<BoundReport> {
    let n = config.dim();
    let p = config.p.unwrap_or(2.0);
    if p < 1.0 {
        return Err(Error::Config(format!("thm4_1 needs p ≥ 1, got {p}")));
    }
    let nu = NuVector::new(config.nu.clone())?;
    let mut e = vec![0.0; n];
    e[config.axis] = 1.0;
    let nu_up = nu.shifted(&e)?;
    let k = MultiIndex::new(config.k.clone())?;
    let mut per_level = Vec::new();
    let mut worst_level = Vec::new();
    for level in 0..config.levels {
        let grid = build_grid(&config.grid, n, config.grid.nodes << level)?;
        let fs = gaussian_bumps(&grid, config.samples, config.seed);
        let a = riesz_apply_many(&nu, &k, &fs, &config.plan)?;
        let b = riesz_apply_many(&nu_up, &k, &fs, &config.plan)?;
        let mut best = 0.0_f64;
        let mut arg = 0;
        for (i, f) in fs.iter().enumerate() {
            let v = lp_norm(&a[i].axpy(-1.0, &b[i])?, p)? / lp_norm(f, p)?;
            if v > best {
                best = v;
                arg = i;
            }
        }
        per_level.push(best);
        worst_level.push(arg);
    }
    let extra = serde_json::json!({ "worst_function": worst_level });
    Ok(operator_report(config, per_level, extra, true, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Spacing;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn drawn_atoms_validate() {
        let g = Grid::cube(Spacing::Logarithmic, 0.01, 100.0, 600, 1).unwrap();
        let mut r = rng(4);
        for _ in 0..20 {
            let (f, rec) = draw_atom(&mut r, &g, 1.0).unwrap();
            if rec.cancelling {
                assert!(f.integral().abs() <= 1e-9 * lp_norm(&f, 1.0).unwrap());
            }
        }
    }

    #[test]
    fn maximal_times_span_the_scales() {
        let g = Grid::cube(Spacing::Uniform, 1.0, 3.0, 21, 1).unwrap();
        let t = maximal_times(&g, 2);
        assert!((t[0] - 0.01).abs() < 1e-12 && (t.last().unwrap() - 9.0).abs() < 1e-9);
    }
}
