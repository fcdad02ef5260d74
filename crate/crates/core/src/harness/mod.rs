//! Configuration-driven verification campaigns.
//!
//! A [`CampaignConfig`] names one inequality and its parameters;
//! [`run_campaign`] samples the inequality at nested refinement levels, fits
//! the constants and returns a [`BoundReport`]. Every inequality has a
//! bundled default configuration ([`bundled_config`]).

pub mod engine;
mod operator;
mod pointwise;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use engine::PolishConfig;
pub use operator::{
    bmo_spot_check, hardy_spot_check, BmoSpotConfig, BmoSpotReport, HardySpotConfig,
    HardySpotReport,
};
pub use pointwise::difference_region_bound;

use crate::error::{Error, Result};
use crate::grid::Spacing;
use crate::heat::{BoundKind, BoundParams, NuVector};
use crate::report::{fit_constants, format_float, BoundReport, Sample};
use crate::riesz::cz::cz_sweep;
use crate::riesz::{CzCheckConfig, MultiIndex, SubordinationPlan};
use engine::{level_counts, sweep, Sweep};
use pointwise::{DifferenceIntegralObjective, GaussianObjective, Lhs};

/// Inequalities the harness can check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CampaignId {
    #[serde(rename = "thm2_1")]
    Thm2_1,
    #[serde(rename = "thm2_4")]
    Thm2_4,
    #[serde(rename = "thm2_5")]
    Thm2_5,
    #[serde(rename = "cor2_6a")]
    Cor2_6a,
    #[serde(rename = "cor2_6b")]
    Cor2_6b,
    #[serde(rename = "prop2_7")]
    Prop2_7,
    #[serde(rename = "prop2_8")]
    Prop2_8,
    #[serde(rename = "prop2_9")]
    Prop2_9,
    #[serde(rename = "prop2_10")]
    Prop2_10,
    #[serde(rename = "cor2_11")]
    Cor2_11,
    #[serde(rename = "thm1_5_size")]
    Thm1_5Size,
    #[serde(rename = "thm1_5_smooth")]
    Thm1_5Smooth,
    #[serde(rename = "thm1_6i")]
    Thm1_6i,
    #[serde(rename = "thm1_6ii")]
    Thm1_6ii,
    #[serde(rename = "thm4_1")]
    Thm4_1,
}

impl CampaignId {
    pub const ALL: [CampaignId; 15] = [
        Self::Thm2_1,
        Self::Thm2_4,
        Self::Thm2_5,
        Self::Cor2_6a,
        Self::Cor2_6b,
        Self::Prop2_7,
        Self::Prop2_8,
        Self::Prop2_9,
        Self::Prop2_10,
        Self::Cor2_11,
        Self::Thm1_5Size,
        Self::Thm1_5Smooth,
        Self::Thm1_6i,
        Self::Thm1_6ii,
        Self::Thm4_1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Thm2_1 => "thm2_1",
            Self::Thm2_4 => "thm2_4",
            Self::Thm2_5 => "thm2_5",
            Self::Cor2_6a => "cor2_6a",
            Self::Cor2_6b => "cor2_6b",
            Self::Prop2_7 => "prop2_7",
            Self::Prop2_8 => "prop2_8",
            Self::Prop2_9 => "prop2_9",
            Self::Prop2_10 => "prop2_10",
            Self::Cor2_11 => "cor2_11",
            Self::Thm1_5Size => "thm1_5_size",
            Self::Thm1_5Smooth => "thm1_5_smooth",
            Self::Thm1_6i => "thm1_6i",
            Self::Thm1_6ii => "thm1_6ii",
            Self::Thm4_1 => "thm4_1",
        }
    }
}

impl fmt::Display for CampaignId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CampaignId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown inequality id {s:?}")))
    }
}

/// Grid used by the operator-level campaigns (coarsest level; each further
/// level doubles the node count per axis). Pointwise campaigns only use the
/// box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_nodes() -> usize {
    200
}

fn default_spacing() -> Spacing {
    Spacing::Logarithmic
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo: 0.01,
            hi: 20.0,
            nodes: default_nodes(),
            spacing: default_spacing(),
        }
    }
}

fn default_rates() -> Vec<f64> {
    vec![2.0, 4.0, 8.0, 16.0, 32.0]
}

fn default_levels() -> u32 {
    3
}

fn default_t_range() -> [f64; 2] {
    [1e-4, 1e2]
}

fn default_epsilon() -> f64 {
    0.5
}

fn default_min_separation() -> f64 {
    0.01
}

/// One campaign. Fields an inequality does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub id: CampaignId,
    pub nu: Vec<f64>,
    /// Derivative / Riesz order per coordinate (zeros when omitted).
    #[serde(default)]
    pub k: Vec<u32>,
    /// `δ` order per coordinate (zeros when omitted).
    #[serde(default)]
    pub ell: Vec<u32>,
    /// Laplacian power.
    #[serde(default)]
    pub m: u32,
    /// Samples at the finest level (random points, atoms or functions).
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Gaussian rates `c` tried by the fit.
    #[serde(default = "default_rates")]
    pub rates: Vec<f64>,
    #[serde(default = "default_levels")]
    pub levels: u32,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_t_range")]
    pub t_range: [f64; 2],
    #[serde(default)]
    pub plan: SubordinationPlan,
    #[serde(default)]
    pub polish: PolishConfig,
    /// Exponent of the near-diagonal term in the time-integrated difference
    /// bound.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Minimum `|x - y|` for Riesz kernel samples.
    #[serde(default = "default_min_separation")]
    pub min_separation: f64,
    /// Lebesgue / Hardy exponent (operator campaigns).
    #[serde(default)]
    pub p: Option<f64>,
    /// Coordinate whose order is raised by one (order-difference operators).
    #[serde(default)]
    pub axis: usize,
    /// Campanato smoothness (the degree used is `⌊s⌋`).
    #[serde(default)]
    pub s: f64,
}

impl CampaignConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialise")
    }

    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    fn orders(&self, v: &[u32], name: &str) -> Result<Vec<u32>> {
        if v.is_empty() {
            return Ok(vec![0; self.dim()]);
        }
        if v.len() != self.dim() {
            return Err(Error::Config(format!(
                "{name} has {} components but nu has {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(v.to_vec())
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.samples < 100 {
            return cfg(format!(
                "samples must be at least 100, got {}",
                self.samples
            ));
        }
        if self.levels < 2 {
            return cfg(format!(
                "need at least 2 refinement levels, got {}",
                self.levels
            ));
        }
        if self.levels > 8 {
            return cfg(format!("at most 8 refinement levels, got {}", self.levels));
        }
        if self.rates.is_empty() || self.rates.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return cfg("rates must be a nonempty list of positive numbers".into());
        }
        let [t0, t1] = self.t_range;
        if !(t0 > 0.0 && t1 > t0 && t1.is_finite()) {
            return cfg(format!("t_range needs 0 < lo < hi, got {:?}", self.t_range));
        }
        let g = &self.grid;
        if !(g.lo > 0.0 && g.hi > g.lo && g.hi.is_finite()) || g.nodes < 8 {
            return cfg("grid needs 0 < lo < hi and at least 8 nodes".into());
        }
        if !(self.epsilon > 0.0) {
            return cfg("epsilon must be positive".into());
        }
        if !(self.min_separation > 0.0) {
            return cfg("min_separation must be positive".into());
        }
        NuVector::new(self.nu.clone()).map_err(|e| Error::Config(e.to_string()))?;
        let k = self.orders(&self.k, "k")?;
        self.orders(&self.ell, "ell")?;
        self.plan
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let n = self.dim();
        use CampaignId::*;
        let one_d = matches!(
            self.id,
            Thm2_1 | Thm2_4 | Thm2_5 | Cor2_6a | Cor2_6b | Prop2_7 | Prop2_8
        );
        if one_d && n != 1 {
            return cfg(format!(
                "{} is one-dimensional, nu has {n} components",
                self.id
            ));
        }
        let needs_k = matches!(
            self.id,
            Prop2_8 | Thm1_5Size | Thm1_5Smooth | Thm1_6i | Thm1_6ii | Thm4_1
        );
        if needs_k && k.iter().sum::<u32>() == 0 {
            return cfg(format!("{} needs a nonzero k", self.id));
        }
        if matches!(self.id, Thm2_4 | Prop2_7 | Prop2_9 | Thm2_5 | Prop2_10) && self.ell.is_empty()
        {
            return cfg(format!("{} needs ell", self.id));
        }
        if self.id == Thm4_1 && self.axis >= n {
            return cfg(format!("axis {} out of range for dimension {n}", self.axis));
        }
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return cfg(format!("s must be nonnegative, got {}", self.s));
        }
        if let Some(p) = self.p {
            if !(p > 0.0) || !p.is_finite() {
                return cfg(format!("p must be positive, got {p}"));
            }
        }
        Ok(())
    }
}

/// A report together with the samples behind the selected constant.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOutcome {
    pub report: BoundReport,
    /// Samples of the selected column, in level order (empty for
    /// operator-level campaigns, whose samples are functions).
    pub samples: Vec<Sample>,
}

/// Runs a campaign and returns its report.
pub fn run_campaign(config: &CampaignConfig) -> Result<BoundReport> {
    Ok(run_campaign_with_samples(config)?.report)
}

fn report_from_sweep(
    config: &CampaignConfig,
    sw: &Sweep,
    rates: Option<&[f64]>,
) -> (BoundReport, Vec<Sample>) {
    let cols = rates.map_or(1, <[f64]>::len);
    let fit = fit_constants(&sw.ratios(), cols, &sw.level_ends);
    let warned = sw.warnings();
    let mut warnings = Vec::new();
    if warned > 0 {
        warnings.push(format!("{warned} samples raised numerical warnings"));
    }
    let report = BoundReport {
        id: config.id.to_string(),
        params: serde_json::to_value(config).expect("configs serialise"),
        c_hat: *fit.per_level.last().unwrap_or(&f64::NAN),
        rate_hat: rates.map(|r| r[fit.rate_index]),
        worst_sample: fit.worst.map(|i| sw.evals[i].sample(fit.rate_index)),
        refinement_c: fit.per_level.clone(),
        refinement_delta: fit.drift,
        verdict: fit.verdict,
        warnings,
    };
    let samples = sw.evals.iter().map(|e| e.sample(fit.rate_index)).collect();
    (report, samples)
}

fn gaussian(
    config: &CampaignConfig,
    lhs: Lhs,
    kind: BoundKind,
) -> Result<(BoundReport, Vec<Sample>)> {
    let obj = GaussianObjective {
        nu: NuVector::new(config.nu.clone())?,
        params: BoundParams {
            k: config.orders(&config.k, "k")?,
            ell: config.orders(&config.ell, "ell")?,
            m: config.m,
        },
        kind,
        lhs,
        rates: config.rates.clone(),
        box_lo: config.grid.lo,
        box_hi: config.grid.hi,
        t_lo: config.t_range[0],
        t_hi: config.t_range[1],
    };
    let counts = level_counts(config.samples, config.levels);
    let sw = sweep(&obj, config.seed, &counts, &config.polish)?;
    Ok(report_from_sweep(config, &sw, Some(&config.rates)))
}

/// Runs a campaign and also returns the evaluated samples.
pub fn run_campaign_with_samples(config: &CampaignConfig) -> Result<CampaignOutcome> {
    config.validate()?;
    use CampaignId::*;
    let (report, samples) = match config.id {
        Thm2_1 => gaussian(config, Lhs::Kernel, BoundKind::Thm21)?,
        Thm2_4 => gaussian(config, Lhs::Delta, BoundKind::Thm24)?,
        Thm2_5 => gaussian(config, Lhs::MixedPartial, BoundKind::Thm25)?,
        Cor2_6a => gaussian(config, Lhs::DeltaLaplacian, BoundKind::Cor26)?,
        Cor2_6b => gaussian(config, Lhs::LaplacianDeltaStar, BoundKind::Cor26)?,
        Prop2_7 => gaussian(config, Lhs::OrderDifference, BoundKind::Prop27)?,
        Prop2_9 => gaussian(config, Lhs::Delta, BoundKind::Prop29)?,
        Prop2_10 => gaussian(config, Lhs::MixedPartial, BoundKind::Prop210)?,
        Cor2_11 => gaussian(config, Lhs::BothLaplacianForms, BoundKind::Cor211)?,
        Prop2_8 => {
            let obj = DifferenceIntegralObjective {
                nu: config.nu[0],
                k: config.k[0],
                epsilon: config.epsilon,
                box_lo: config.grid.lo,
                box_hi: config.grid.hi,
                plan: config.plan.clone(),
            };
            let counts = level_counts(config.samples, config.levels);
            let sw = sweep(&obj, config.seed, &counts, &config.polish)?;
            report_from_sweep(config, &sw, None)
        }
        Thm1_5Size | Thm1_5Smooth => {
            let cz = CzCheckConfig {
                samples: config.samples,
                levels: config.levels,
                seed: config.seed,
                box_lo: config.grid.lo,
                box_hi: config.grid.hi,
                min_separation: config.min_separation,
                plan: config.plan.clone(),
                polish: config.polish.clone(),
            };
            let nu = NuVector::new(config.nu.clone())?;
            let k = MultiIndex::new(config.k.clone())?;
            let (cz_report, sw) = cz_sweep(&nu, &k, &cz)?;
            let (mut report, col) = if config.id == Thm1_5Size {
                (cz_report.size, 0)
            } else {
                (cz_report.smooth, 1)
            };
            report.params = serde_json::to_value(config).expect("configs serialise");
            let samples = sw.evals.iter().map(|e| e.sample(col)).collect();
            (report, samples)
        }
        Thm4_1 => (operator::order_difference_campaign(config)?, Vec::new()),
        Thm1_6i => (operator::hardy_campaign(config)?, Vec::new()),
        Thm1_6ii => (operator::bmo_campaign(config)?, Vec::new()),
    };
    Ok(CampaignOutcome { report, samples })
}

/// Writes samples as CSV with header `t,x1..xn,y1..yn,lhs,rhs,ratio`; the `t`
/// column is empty for time-free inequalities, and `y'` columns are appended
/// for smoothness triples.
pub fn write_samples_csv<W: Write>(samples: &[Sample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = samples.first().map_or(1, |s| s.x.len());
    let with_prime = samples.first().is_some_and(|s| s.y_prime.is_some());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("y{i}")));
    header.extend(["lhs", "rhs", "ratio"].map(String::from));
    if with_prime {
        header.extend((1..=n).map(|i| format!("yp{i}")));
    }
    w.write_record(&header)?;
    for s in samples {
        let mut row = vec![s.t.map_or(String::new(), format_float)];
        row.extend(s.x.iter().chain(&s.y).map(|&v| format_float(v)));
        row.extend([s.lhs, s.rhs, s.ratio].map(format_float));
        if let Some(yp) = &s.y_prime {
            row.extend(yp.iter().map(|&v| format_float(v)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

const BUNDLED: [(&str, &str); 15] = [
    ("thm2_1", include_str!("../../configs/thm2_1.json")),
    ("thm2_4", include_str!("../../configs/thm2_4.json")),
    ("thm2_5", include_str!("../../configs/thm2_5.json")),
    ("cor2_6a", include_str!("../../configs/cor2_6a.json")),
    ("cor2_6b", include_str!("../../configs/cor2_6b.json")),
    ("prop2_7", include_str!("../../configs/prop2_7.json")),
    ("prop2_8", include_str!("../../configs/prop2_8.json")),
    ("prop2_9", include_str!("../../configs/prop2_9.json")),
    ("prop2_10", include_str!("../../configs/prop2_10.json")),
    ("cor2_11", include_str!("../../configs/cor2_11.json")),
    (
        "thm1_5_size",
        include_str!("../../configs/thm1_5_size.json"),
    ),
    (
        "thm1_5_smooth",
        include_str!("../../configs/thm1_5_smooth.json"),
    ),
    ("thm1_6i", include_str!("../../configs/thm1_6i.json")),
    ("thm1_6ii", include_str!("../../configs/thm1_6ii.json")),
    ("thm4_1", include_str!("../../configs/thm4_1.json")),
];

/// The bundled default configuration of an inequality.
pub fn bundled_config(id: CampaignId) -> CampaignConfig {
    let (_, text) = BUNDLED
        .iter()
        .find(|(name, _)| *name == id.as_str())
        .expect("every id has a bundled config");
    CampaignConfig::from_json(text).expect("bundled configs parse")
}
