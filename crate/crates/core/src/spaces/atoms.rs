//! Validators for `(p, ρ)`-atoms and one-dimensional F-atoms.

use serde::{Deserialize, Serialize};

use super::poly::{monomial, multi_indices};
use super::{critical_function, Ball};
use crate::error::{domain, Error, Result};
use crate::grid::{Axis, Grid, GridFunction, Spacing};
use crate::heat::NuVector;
use crate::report::Verdict;

/// A grid function proposed as an atom for `ball` and exponent `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomCandidate {
    pub f: GridFunction,
    pub ball: Ball,
    pub p: f64,
}

/// Validator options.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomOptions {
    /// When set, `p` must also exceed `n/(n + ν_min + 1/2)`.
    pub nu: Option<NuVector>,
    /// Require `r ≤ ρ(x_0)` (the restricted atoms, which span the same space).
    pub restricted: bool,
}

/// Per-condition outcome of [`validate_p_rho_atom`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomVerdict {
    pub verdict: Verdict,
    pub p_admissible: bool,
    pub support: bool,
    pub size: bool,
    /// `None` when the ball is at least critical and no moments are required.
    pub cancellation: Option<bool>,
    pub restricted_radius: Option<bool>,
    /// `(α, |∫a (x - x_0)^α| / (‖a‖₁ r^{|α|}))` for the required moments.
    pub moments: Vec<(Vec<u32>, f64)>,
    pub sup_norm: f64,
    pub size_bound: f64,
    pub l1_norm: f64,
    pub messages: Vec<String>,
}

const SIZE_TOL: f64 = 1e-12;
const MOMENT_TOL: f64 = 1e-10;

/// Checks support in the ball, `‖a‖_∞ ≤ |B|^{-1/p}` and, for balls with
/// `r < ρ(x_0)`, vanishing moments up to order `⌊n(1/p - 1)⌋`.
///
/// Moments are taken against `(x - x_0)^α`; with the lower ones vanishing
/// this is the same condition as for `x^α`, and the tolerance
/// `1e-10 · ‖a‖₁ · r^{|α|}` is scale-free.
pub fn validate_p_rho_atom(a: &AtomCandidate, opts: &AtomOptions) -> Result<AtomVerdict> {
    let n = a.f.grid.dim();
    if a.ball.dim() != n {
        return Err(Error::GridMismatch(
            "ball and grid dimensions differ".into(),
        ));
    }
    let mut messages = Vec::new();
    let nf = n as f64;
    let mut p_admissible = a.p > 0.0 && a.p <= 1.0;
    if let Some(nu) = &opts.nu {
        let lower = nf / (nf + nu.gamma());
        if a.p <= lower {
            p_admissible = false;
            messages.push(format!("p = {} is not above n/(n+γ_ν) = {lower}", a.p));
        }
    }
    if !p_admissible {
        messages.push(format!("p = {} outside the admissible range", a.p));
    }

    let mut support = true;
    let mut sup: f64 = 0.0;
    let mut l1 = 0.0;
    for (i, &v) in a.f.values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        if !a.ball.contains(&a.f.grid.node(i)) {
            support = false;
        }
        sup = sup.max(v.abs());
        l1 += a.f.grid.weight(i) * v.abs();
    }
    if !support {
        messages.push("nonzero samples outside the ball".into());
    }
    let size_bound = a.ball.volume().powf(-1.0 / a.p);
    let size = sup <= size_bound * (1.0 + SIZE_TOL);
    if !size {
        messages.push(format!(
            "sup norm {sup:.6e} exceeds |B|^(-1/p) = {size_bound:.6e}"
        ));
    }

    let rho = critical_function(&a.ball.center)?;
    let r = a.ball.radius;
    let mut moments = Vec::new();
    let cancellation = if r < rho && p_admissible {
        let order = (nf * (1.0 / a.p - 1.0) + 1e-12).floor().max(0.0) as u32;
        let mut ok = true;
        for al in multi_indices(n, order) {
            let m: f64 = a
                .f
                .values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| {
                    let x = a.f.grid.node(i);
                    let u: Vec<f64> = x.iter().zip(&a.ball.center).map(|(p, c)| p - c).collect();
                    a.f.grid.weight(i) * v * monomial(&u, &al)
                })
                .sum();
            let scale = l1 * r.powi(al.iter().sum::<u32>() as i32);
            let rel = if scale > 0.0 { m.abs() / scale } else { 0.0 };
            if rel > MOMENT_TOL {
                ok = false;
                messages.push(format!("moment {al:?} is {rel:.3e} of ‖a‖₁ r^|α|"));
            }
            moments.push((al, rel));
        }
        Some(ok)
    } else {
        None
    };
    let restricted_radius = opts.restricted.then_some(r <= rho * (1.0 + 1e-12));
    if restricted_radius == Some(false) {
        messages.push(format!(
            "radius {r} exceeds ρ(x_0) = {rho} for a restricted atom"
        ));
    }
    let valid = p_admissible
        && support
        && size
        && cancellation.unwrap_or(true)
        && restricted_radius.unwrap_or(true);
    Ok(AtomVerdict {
        verdict: if valid {
            Verdict::Valid
        } else {
            Verdict::Invalid
        },
        p_admissible,
        support,
        size,
        cancellation,
        restricted_radius,
        moments,
        sup_norm: sup,
        size_bound,
        l1_norm: l1,
        messages,
    })
}

/// Which F-atom shape was recognised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FAtomKind {
    /// `(1/δ) χ_(0,δ)`.
    Indicator,
    /// Mean zero on an interval `I` with `‖a‖_∞ ≤ 1/|I|`.
    MeanZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FAtomVerdict {
    pub verdict: Verdict,
    pub kind: Option<FAtomKind>,
    /// `δ` for indicators, `(a, b)` of `I` for mean-zero atoms.
    pub delta: Option<f64>,
    pub interval: Option<(f64, f64)>,
    pub messages: Vec<String>,
}

/// Relative slack for matching grid nodes against `δ` and equal values.
const GRID_TOL: f64 = 1e-9;

/// Recognises one-dimensional F-atoms. The indicator must start at the first
/// grid node (the grid's stand-in for 0). For mean-zero atoms `I` is the
/// support hull widened to the neighbouring cell midpoints.
pub fn validate_f_atom(a: &GridFunction) -> Result<FAtomVerdict> {
    if a.grid.dim() != 1 {
        return Err(domain("F-atoms are one-dimensional"));
    }
    let x = &a.grid.axes[0].nodes;
    let nz: Vec<usize> = (0..x.len()).filter(|&i| a.values[i] != 0.0).collect();
    let mut messages = Vec::new();
    let (Some(&first), Some(&last)) = (nz.first(), nz.last()) else {
        messages.push("zero function".into());
        return Ok(FAtomVerdict {
            verdict: Verdict::Invalid,
            kind: None,
            delta: None,
            interval: None,
            messages,
        });
    };

    // type (a)
    let v0 = a.values[first];
    let contiguous = nz.len() == last - first + 1;
    let constant = nz
        .iter()
        .all(|&i| (a.values[i] - v0).abs() <= GRID_TOL * v0.abs());
    if first == 0 && contiguous && constant && v0 > 0.0 {
        let delta = 1.0 / v0;
        let ends_inside = x[last] <= delta * (1.0 + GRID_TOL);
        let next_outside = x
            .get(last + 1)
            .is_none_or(|&nx| nx >= delta * (1.0 - GRID_TOL));
        if ends_inside && next_outside && x.get(last + 1).is_some() {
            return Ok(FAtomVerdict {
                verdict: Verdict::Valid,
                kind: Some(FAtomKind::Indicator),
                delta: Some(delta),
                interval: None,
                messages,
            });
        }
        messages.push(format!(
            "constant {v0} from the origin, but its support does not end at δ = {delta}"
        ));
    }

    // type (b)
    let lo = if first == 0 {
        x[0]
    } else {
        0.5 * (x[first - 1] + x[first])
    };
    let hi = if last + 1 == x.len() {
        x[last]
    } else {
        0.5 * (x[last] + x[last + 1])
    };
    let len = hi - lo;
    let (mut mean, mut l1, mut sup) = (0.0, 0.0, 0.0_f64);
    for &i in &nz {
        let w = a.grid.weight(i);
        mean += w * a.values[i];
        l1 += w * a.values[i].abs();
        sup = sup.max(a.values[i].abs());
    }
    let mean_zero = mean.abs() <= 1e-10 * l1;
    let bounded = sup <= (1.0 + 1e-12) / len;
    if !mean_zero {
        messages.push(format!("mean {mean:.3e} is not zero"));
    }
    if !bounded {
        messages.push(format!("sup norm {sup} exceeds 1/|I| = {}", 1.0 / len));
    }
    let valid = mean_zero && bounded;
    Ok(FAtomVerdict {
        verdict: if valid {
            Verdict::Valid
        } else {
            Verdict::Invalid
        },
        kind: valid.then_some(FAtomKind::MeanZero),
        delta: None,
        interval: Some((lo, hi)),
        messages,
    })
}

/// Which validator a fixture targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    PRho,
    FAtom,
}

/// Axis of a fixture grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureAxis {
    pub spacing: Spacing,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// A labelled atom stored as JSON: grid axes, sampled values, and for
/// `(p, ρ)` atoms the ball and exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomFixture {
    pub name: String,
    pub kind: FixtureKind,
    pub expected: Verdict,
    pub axes: Vec<FixtureAxis>,
    #[serde(default)]
    pub ball: Option<Ball>,
    #[serde(default)]
    pub p: Option<f64>,
    pub values: Vec<f64>,
}

impl AtomFixture {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn function(&self) -> Result<GridFunction> {
        let axes = self
            .axes
            .iter()
            .map(|a| Axis::new(a.spacing, a.lo, a.hi, a.count))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(Grid::new(axes)?, self.values.clone())
    }

    /// Runs the matching validator and returns its verdict.
    pub fn check(&self) -> Result<Verdict> {
        let f = self.function()?;
        match self.kind {
            FixtureKind::FAtom => Ok(validate_f_atom(&f)?.verdict),
            FixtureKind::PRho => {
                let (Some(ball), Some(p)) = (self.ball.clone(), self.p) else {
                    return Err(Error::Config(format!(
                        "fixture {} needs a ball and p",
                        self.name
                    )));
                };
                let cand = AtomCandidate { f, ball, p };
                Ok(validate_p_rho_atom(&cand, &AtomOptions::default())?.verdict)
            }
        }
    }
}
