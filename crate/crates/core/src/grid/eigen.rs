//! Eigenfunctions `φ_λ(x) = Π_j (λ_j x_j)^{1/2} J_{ν_j}(λ_j x_j)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::heat::NuVector;
use crate::special::gamma;

/// Frequency vector `λ` with positive components; `Δ_ν φ_λ = |λ|² φ_λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenfunctionSpec {
    pub lambda: Vec<f64>,
}

impl EigenfunctionSpec {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() || lambda.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(domain("eigenfunction frequencies must be positive"));
        }
        Ok(Self { lambda })
    }

    /// `|λ|²`, the eigenvalue.
    pub fn eigenvalue(&self) -> f64 {
        self.lambda.iter().map(|v| v * v).sum()
    }
}

const SERIES_SWITCH: f64 = 20.0;

/// Bessel function of the first kind `J_ν(z)`, `z ≥ 0`, `ν > -1`.
///
/// Power series up to `z = 20` and wherever the large-argument expansion fails
/// to settle; the series loses roughly `e^z / 10^16` absolute accuracy there.
pub fn bessel_j(nu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if z > SERIES_SWITCH {
        if let Some(v) = hankel_asymptotic(nu, z) {
            return v;
        }
    }
    let q = -0.25 * z * z;
    let mut term = (0.5 * z).powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    for k in 1..400 {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() && kf > 0.5 * z {
            break;
        }
    }
    sum
}

fn hankel_asymptotic(nu: f64, z: f64) -> Option<f64> {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * z);
        if term.abs() > 1e3 {
            return None;
        }
        // terms alternate between Q (odd k) and P (even k) with sign (-1)^{⌊k/2⌋}
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        if term.abs() < 1e-17 {
            let chi = z - (0.5 * nu + 0.25) * std::f64::consts::PI;
            return Some(
                (2.0 / (std::f64::consts::PI * z)).sqrt() * (p * chi.cos() - q * chi.sin()),
            );
        }
    }
    None
}

/// `φ_λ(x)` for orders `ν`.
pub fn eigenfunction(nu: &NuVector, spec: &EigenfunctionSpec, x: &[f64]) -> Result<f64> {
    if x.len() != nu.dim() || spec.lambda.len() != nu.dim() {
        return Err(domain("eigenfunction dimensions disagree"));
    }
    if x.iter().any(|v| !(*v > 0.0)) {
        return Err(domain("eigenfunction needs positive coordinates"));
    }
    Ok(nu
        .as_slice()
        .iter()
        .zip(&spec.lambda)
        .zip(x)
        .map(|((&n, &l), &xj)| {
            let z = l * xj;
            z.sqrt() * bessel_j(n, z)
        })
        .product())
}
