//! Bound reports and the constant-fitting rule shared by every campaign.

use serde::{Deserialize, Serialize};

/// Outcome of a campaign or a validator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Violated,
    Valid,
    Invalid,
}

impl Verdict {
    /// Process exit code: 0 for a pass, 1 otherwise.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Stable | Verdict::Valid => 0,
            _ => 1,
        }
    }

    pub fn passed(self) -> bool {
        self.exit_code() == 0
    }
}

/// One evaluated sample. `t` is absent for time-free inequalities and
/// `y_prime` for size estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_prime: Option<Vec<f64>>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Result of checking one inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub id: String,
    pub params: serde_json::Value,
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
    /// Gaussian rate `c` of the selected fit, when the bound has one.
    #[serde(rename = "c_hat")]
    pub rate_hat: Option<f64>,
    pub worst_sample: Option<Sample>,
    #[serde(rename = "refinement_C")]
    pub refinement_c: Vec<f64>,
    pub refinement_delta: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl BoundReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialise")
    }
}

/// Shortest round-trip text for `v`, in exponent form outside `[1e-4, 1e15)`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Largest relative growth of a constant sequence, `(C_last - C_first)/C_last`.
pub fn relative_drift(cs: &[f64]) -> f64 {
    let (Some(first), Some(last)) = (cs.first(), cs.last()) else {
        return f64::INFINITY;
    };
    if !cs.iter().all(|c| c.is_finite()) {
        return f64::INFINITY;
    }
    if *last == 0.0 {
        return 0.0;
    }
    cs.iter()
        .map(|c| ((c - first) / last).abs())
        .fold(0.0, f64::max)
        .max(((last - first) / last).abs())
}

/// Drift below which a constant counts as refinement-stable.
pub const STABLE_DRIFT: f64 = 0.05;

/// Selected constants for one inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    /// Index into the rate grid (0 when the bound has no rate).
    pub rate_index: usize,
    /// `C` at each refinement level.
    pub per_level: Vec<f64>,
    pub drift: f64,
    /// Sample attaining the final `C`.
    pub worst: Option<usize>,
    pub verdict: Verdict,
}

/// Fits constants from per-sample ratios.
///
/// `ratios[i][c]` is the ratio of sample `i` for rate `c`; level `r` uses the
/// first `levels[r]` samples, so the constants are maxima over nested sample
/// sets. The smallest rate with a finite, stable constant wins; failing that,
/// the finite rate with the least drift (verdict unstable); with no finite
/// constant at all the verdict is violated. Ties go to the lowest index.
pub fn fit_constants(ratios: &[Vec<f64>], rates: usize, levels: &[usize]) -> Fit {
    let rates = rates.max(1);
    let mut candidates = Vec::with_capacity(rates);
    for c in 0..rates {
        let mut per_level = Vec::with_capacity(levels.len());
        let mut best = 0.0_f64;
        let mut worst = None;
        let mut start = 0;
        for &end in levels {
            for (i, r) in ratios.iter().enumerate().take(end).skip(start) {
                let v = if r[c].is_nan() { f64::INFINITY } else { r[c] };
                if worst.is_none() || v > best {
                    best = v;
                    worst = Some(i);
                }
            }
            start = end;
            per_level.push(best);
        }
        let drift = relative_drift(&per_level);
        candidates.push((c, per_level, drift, worst));
    }
    let finite = |p: &[f64]| p.last().is_some_and(|v| v.is_finite());
    if let Some((c, p, d, w)) = candidates
        .iter()
        .find(|(_, p, d, _)| finite(p) && *d < STABLE_DRIFT)
    {
        return Fit {
            rate_index: *c,
            per_level: p.clone(),
            drift: *d,
            worst: *w,
            verdict: Verdict::Stable,
        };
    }
    let best = candidates
        .iter()
        .filter(|(_, p, _, _)| finite(p))
        .min_by(|a, b| a.2.total_cmp(&b.2));
    match best {
        Some((c, p, d, w)) => Fit {
            rate_index: *c,
            per_level: p.clone(),
            drift: *d,
            worst: *w,
            verdict: Verdict::Unstable,
        },
        None => {
            let (c, p, d, w) = candidates.swap_remove(0);
            Fit {
                rate_index: c,
                per_level: p,
                drift: d,
                worst: w,
                verdict: Verdict::Violated,
            }
        }
    }
}
