//! Right-hand sides of the Gaussian-type kernel estimates, with constant 1.

use serde::{Deserialize, Serialize};

use super::{KernelPoint, NuVector};
use crate::error::{domain, Result};
use crate::spaces::critical_function;

/// Which estimate to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// `t^{-1/2} G W(x) W(y)` with `W(x) = (1 + √t/x)^{-ν-1/2}`.
    Thm21,
    /// `t^{-(ℓ+1)/2} G W(x) W(y)`.
    Thm24,
    /// `[t^{-k/2} + x^{-k}] t^{-(ℓ+1)/2} G W(x) W(y)`.
    Thm25,
    /// `t^{-(n+|ℓ|)/2} G (1 + √t/ρ(x) + √t/ρ(y))^{-(ν_min+1/2)}`.
    Prop29,
    /// `[t^{-|k|/2} + ρ(x)^{-|k|}]` times the `Prop29` right-hand side.
    Prop210,
    /// `t^{-(k+2M+1)/2} G`.
    Cor26,
    /// `t^{-(|k|+2M+n)/2} G`.
    Cor211,
    /// `G / (x t^{ℓ/2})`, meaningful on `y/2 < x < 2y`, `x ≥ √t`.
    Prop27,
}

impl std::str::FromStr for BoundKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "thm21" => Self::Thm21,
            "thm24" => Self::Thm24,
            "thm25" => Self::Thm25,
            "prop29" => Self::Prop29,
            "prop210" => Self::Prop210,
            "cor26" => Self::Cor26,
            "cor211" => Self::Cor211,
            "prop27" => Self::Prop27,
            other => return Err(domain(format!("unknown bound kind {other:?}"))),
        })
    }
}

/// Derivative orders entering a bound. Unused fields are ignored.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundParams {
    /// `k`: ∂ or δ order (per coordinate).
    #[serde(default)]
    pub k: Vec<u32>,
    /// `ℓ`: δ order (per coordinate).
    #[serde(default)]
    pub ell: Vec<u32>,
    /// Power of the Laplacian.
    #[serde(default)]
    pub m: u32,
}

fn total(v: &[u32]) -> f64 {
    v.iter().map(|&a| f64::from(a)).sum()
}

fn weight(nu: f64, t: f64, x: f64) -> f64 {
    (1.0 + t.sqrt() / x).powf(-nu - 0.5)
}

/// The bound without its Gaussian factor `exp(-|x-y|²/ct)`.
pub fn bound_rhs_reduced(
    kind: BoundKind,
    nu: &NuVector,
    params: &BoundParams,
    q: &KernelPoint,
) -> Result<f64> {
    if nu.dim() != q.dim() {
        return Err(domain("order vector and point dimensions differ"));
    }
    let n = q.dim() as f64;
    let t = q.t;
    let one_d = || -> Result<(f64, f64, f64)> {
        if q.dim() != 1 {
            return Err(domain(format!("{kind:?} is a one-dimensional estimate")));
        }
        Ok((nu.as_slice()[0], q.x[0], q.y[0]))
    };
    let rho_factor = || {
        let rx = critical_function(&q.x).expect("validated point");
        let ry = critical_function(&q.y).expect("validated point");
        (1.0 + t.sqrt() / rx + t.sqrt() / ry).powf(-nu.gamma())
    };
    let k = total(&params.k);
    let ell = total(&params.ell);
    let m = f64::from(params.m);
    Ok(match kind {
        BoundKind::Thm21 => {
            let (v, x, y) = one_d()?;
            t.powf(-0.5) * weight(v, t, x) * weight(v, t, y)
        }
        BoundKind::Thm24 => {
            let (v, x, y) = one_d()?;
            t.powf(-(ell + 1.0) / 2.0) * weight(v, t, x) * weight(v, t, y)
        }
        BoundKind::Thm25 => {
            let (v, x, y) = one_d()?;
            (t.powf(-k / 2.0) + x.powf(-k))
                * t.powf(-(ell + 1.0) / 2.0)
                * weight(v, t, x)
                * weight(v, t, y)
        }
        BoundKind::Prop29 => t.powf(-(n + ell) / 2.0) * rho_factor(),
        BoundKind::Prop210 => {
            let rx = critical_function(&q.x)?;
            (t.powf(-k / 2.0) + rx.powf(-k)) * t.powf(-(n + ell) / 2.0) * rho_factor()
        }
        BoundKind::Cor26 => {
            one_d()?;
            t.powf(-(k + 2.0 * m + 1.0) / 2.0)
        }
        BoundKind::Cor211 => t.powf(-(k + 2.0 * m + n) / 2.0),
        BoundKind::Prop27 => {
            let (_, x, _) = one_d()?;
            1.0 / (x * t.powf(ell / 2.0))
        }
    })
}

/// The bound with constant 1 and Gaussian rate `c`.
pub fn bound_rhs(
    kind: BoundKind,
    nu: &NuVector,
    params: &BoundParams,
    q: &KernelPoint,
    c: f64,
) -> Result<f64> {
    if !(c > 0.0) {
        return Err(domain(format!("Gaussian rate must be positive, got {c}")));
    }
    Ok(bound_rhs_reduced(kind, nu, params, q)? * (-q.dist_sq() / (c * q.t)).exp())
}
