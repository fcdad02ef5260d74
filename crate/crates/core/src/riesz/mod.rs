//! Negative powers of `Δ_ν` and higher-order Riesz transforms through the
//! subordination formula `Δ^{-s} = Γ(s)^{-1} ∫₀^∞ t^s e^{-tΔ} dt/t`.
//!
//! Kernel values integrate `t^{|k|/2} δ_ν^k p_t^ν(x, y)` in `u = ln t`. The
//! integrand vanishes faster than any power as `t → 0` (Gaussian factor) and
//! decays like a power of `t` at infinity, so trapezoidal sums converge very
//! fast and only the tail beyond `t_max` needs a correction: it is
//! extrapolated from the last two nodes as a power law.

mod apply;
pub(crate) mod cz;

use serde::{Deserialize, Serialize};

pub use apply::{fractional_inverse_apply, riesz_adjoint_apply, riesz_apply, riesz_apply_many};
pub use cz::{cz_bound_check, CzCheckConfig, CzReport};

use crate::error::{domain, Result};
use crate::heat::{reduced_unchecked, HeatKernelExpansion, NuVector};
use crate::special::gamma;

/// Multi-index `k ∈ ℕ^n` of a higher-order Riesz transform.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(k: Vec<u32>) -> Result<Self> {
        if k.is_empty() {
            return Err(domain("multi-index needs at least one component"));
        }
        Ok(Self(k))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|k|`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

/// Change of variables used for the `t` integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// Trapezoid in `ln t`.
    LogUniform,
    /// `t = τ exp((π/2) sinh v)`, trapezoid in `v`, with `τ` the squared
    /// distance of the kernel arguments. Runs beyond `t_max` until the
    /// integrand is negligible.
    DoubleExponential,
}

/// Quadrature plan for `∫₀^∞ g(t) dt/t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubordinationPlan {
    pub t_min: f64,
    pub t_max: f64,
    pub nodes_per_decade: u32,
    pub transform: Transform,
    /// Tail estimates above this (relative to the value) are flagged.
    #[serde(default = "default_tail_tolerance")]
    pub tail_tolerance: f64,
}

fn default_tail_tolerance() -> f64 {
    1e-6
}

impl Default for SubordinationPlan {
    fn default() -> Self {
        Self {
            t_min: 1e-6,
            t_max: 1e6,
            nodes_per_decade: 24,
            transform: Transform::LogUniform,
            tail_tolerance: default_tail_tolerance(),
        }
    }
}

impl SubordinationPlan {
    pub fn new(
        t_min: f64,
        t_max: f64,
        nodes_per_decade: u32,
        transform: Transform,
    ) -> Result<Self> {
        let plan = Self {
            t_min,
            t_max,
            nodes_per_decade,
            transform,
            tail_tolerance: default_tail_tolerance(),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_max > self.t_min) || !self.t_max.is_finite() {
            return Err(domain(format!(
                "plan needs 0 < t_min < t_max, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.nodes_per_decade == 0 {
            return Err(domain("plan needs at least one node per decade"));
        }
        if !(self.tail_tolerance > 0.0) {
            return Err(domain("tail tolerance must be positive"));
        }
        Ok(())
    }

    /// The same plan with twice the node density.
    pub fn refined(&self) -> Self {
        Self {
            nodes_per_decade: 2 * self.nodes_per_decade,
            ..self.clone()
        }
    }
}

/// A subordination integral with its estimated truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subordinated {
    pub value: f64,
    pub tail_error: f64,
    /// Set when `tail_error` exceeds the plan tolerance.
    pub tail_warning: bool,
}

/// Upper-tail correction `∫_{u_N}^∞ g du` for a power law `g ∝ e^{-αu}`
/// fitted through the last two of three nodes `(u, g)`, with an error estimate
/// from refitting on the previous pair.
fn power_tail(pts: [(f64, f64); 3]) -> (f64, f64) {
    let [(u0, g0), (u1, g1), (u2, g2)] = pts;
    if g2 == 0.0 {
        return (0.0, 0.0);
    }
    let decays = |a: f64, b: f64| a.signum() == b.signum() && b.abs() < a.abs();
    if decays(g1, g2) {
        let alpha = (g1 / g2).ln() / (u2 - u1);
        let tail = g2 / alpha;
        // the fitted exponent drifts by Δα per node; over the tail's length
        // scale 1/α that moves the tail by about |tail| Δα / (α h)
        let err = if decays(g0, g1) {
            let alpha0 = (g0 / g1).ln() / (u1 - u0);
            tail.abs() * (alpha - alpha0).abs() / ((u2 - u1) * alpha)
        } else {
            tail.abs()
        };
        return (tail, err);
    }
    // no decay visible: no correction, and the error is at least one node
    (0.0, g2.abs() / (u2 - u1).max(1e-3))
}

/// Smallest `t` used for kernels whose arguments are `√d_sq` apart.
fn lower_limit(plan: &SubordinationPlan, d_sq: f64) -> f64 {
    if d_sq > 0.0 {
        plan.t_min.min(d_sq / 160.0)
    } else {
        plan.t_min
    }
}

/// `∫₀^∞ g(t) dt/t` for an integrand that vanishes rapidly at `0` (Gaussian in
/// `d_sq / t`) and decays like a power at infinity.
pub fn subordinate<G>(plan: &SubordinationPlan, d_sq: f64, g: G) -> Result<Subordinated>
where
    G: Fn(f64) -> f64,
{
    plan.validate()?;
    let t_lo = lower_limit(plan, d_sq);
    // the warning threshold is relative to ∫|g|, which stays meaningful where
    // the integral itself crosses zero
    let (value, tail_error, magnitude) = match plan.transform {
        Transform::LogUniform => {
            let (a, b) = (t_lo.ln(), plan.t_max.ln());
            let m = (((b - a) / std::f64::consts::LN_10) * f64::from(plan.nodes_per_decade))
                .ceil()
                .max(3.0) as usize;
            let h = (b - a) / m as f64;
            let vals: Vec<f64> = (0..=m).map(|i| g((a + h * i as f64).exp())).collect();
            let mut sum: f64 = vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[m]);
            sum *= h;
            let u = |i: usize| a + h * i as f64;
            let (tail, err) = power_tail([
                (u(m - 2), vals[m - 2]),
                (u(m - 1), vals[m - 1]),
                (u(m), vals[m]),
            ]);
            // endpoint term of the Euler-Maclaurin expansion for the
            // exponential tail
            let alpha = if tail != 0.0 { vals[m] / tail } else { 0.0 };
            let magnitude = h * vals.iter().map(|v| v.abs()).sum::<f64>();
            (
                sum + tail + h * h / 12.0 * alpha * vals[m],
                err + vals[0].abs(),
                magnitude,
            )
        }
        Transform::DoubleExponential => {
            // the map is run past t_max until the terms are negligible, so no
            // tail model is needed
            let tau = d_sq.clamp(t_lo, plan.t_max);
            let half_pi = std::f64::consts::FRAC_PI_2;
            let va = ((t_lo / tau).ln() / half_pi).asinh();
            let hv = 1.0 / f64::from(plan.nodes_per_decade);
            let term = |i: usize| {
                let v = va + hv * i as f64;
                let u = tau.ln() + half_pi * v.sinh();
                (u, hv * half_pi * v.cosh() * g(u.exp()))
            };
            let mut sum = 0.5 * term(0).1;
            let mut magnitude = sum.abs();
            let mut quiet = 0;
            let mut last = 0.0_f64;
            for i in 1.. {
                let (u, w) = term(i);
                sum += w;
                magnitude += w.abs();
                last = w.abs();
                // only the decay past the centre counts
                let past_centre = u > tau.ln();
                quiet = if past_centre && last <= 1e-18 * sum.abs() {
                    quiet + 1
                } else {
                    0
                };
                if quiet >= 3 || u > 700.0 {
                    break;
                }
            }
            (sum, last + 0.5 * term(0).1.abs(), magnitude)
        }
    };
    let tail_warning = tail_error > plan.tail_tolerance * magnitude.max(f64::MIN_POSITIVE);
    Ok(Subordinated {
        value,
        tail_error,
        tail_warning,
    })
}

fn check_kernel_args(nu: &NuVector, k: &MultiIndex, x: &[f64], y: &[f64]) -> Result<f64> {
    let n = nu.dim();
    if k.dim() != n || x.len() != n || y.len() != n {
        return Err(domain(
            "order vector, multi-index and points must share a dimension",
        ));
    }
    if k.order() == 0 {
        return Err(domain("Riesz transforms need |k| ≥ 1"));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(domain("kernel points must have positive coordinates"));
    }
    let d_sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    if d_sq == 0.0 {
        return Err(domain("Riesz kernels are singular on the diagonal"));
    }
    Ok(d_sq)
}

/// `Π_j e_j(t, x_j, y_j) · exp(-|x-y|²/4t)` with the Gaussian merged in one
/// step; zero once the Gaussian underflows.
fn product_integrand(exps: &[HeatKernelExpansion], t: f64, x: &[f64], y: &[f64], d_sq: f64) -> f64 {
    let arg = d_sq / (4.0 * t);
    if arg > 700.0 {
        return 0.0;
    }
    let mut v = (-arg).exp();
    for (j, e) in exps.iter().enumerate() {
        v *= e.eval_reduced(t, x[j], y[j]);
        if v == 0.0 {
            break;
        }
    }
    v
}

/// Kernel of `δ_ν^k Δ_ν^{-|k|/2}` at `x ≠ y`.
pub fn riesz_kernel(
    nu: &NuVector,
    k: &MultiIndex,
    x: &[f64],
    y: &[f64],
    plan: &SubordinationPlan,
) -> Result<Subordinated> {
    let d_sq = check_kernel_args(nu, k, x, y)?;
    let exps: Vec<HeatKernelExpansion> = nu
        .as_slice()
        .iter()
        .zip(k.as_slice())
        .map(|(&v, &kj)| HeatKernelExpansion::delta_power(v, kj))
        .collect();
    let s = 0.5 * f64::from(k.order());
    let r = subordinate(plan, d_sq, |t| {
        t.powf(s) * product_integrand(&exps, t, x, y, d_sq)
    })?;
    Ok(scale(r, 1.0 / gamma(s)))
}

fn scale(r: Subordinated, c: f64) -> Subordinated {
    Subordinated {
        value: c * r.value,
        tail_error: c.abs() * r.tail_error,
        ..r
    }
}

/// Kernel of `δ_ν^k Δ_ν^{-|k|/2} - δ_{ν+e_j}^k Δ_{ν+e_j}^{-|k|/2}` at `x ≠ y`,
/// one quadrature of the integrand difference.
pub fn riesz_difference_kernel(
    nu: &NuVector,
    k: &MultiIndex,
    axis: usize,
    x: &[f64],
    y: &[f64],
    plan: &SubordinationPlan,
) -> Result<Subordinated> {
    let d_sq = check_kernel_args(nu, k, x, y)?;
    if axis >= nu.dim() {
        return Err(domain(format!("axis {axis} out of range")));
    }
    let exps: Vec<HeatKernelExpansion> = nu
        .as_slice()
        .iter()
        .zip(k.as_slice())
        .enumerate()
        .map(|(j, (&v, &kj))| {
            if j == axis {
                HeatKernelExpansion::order_difference(v, kj)
            } else {
                HeatKernelExpansion::delta_power(v, kj)
            }
        })
        .collect();
    let s = 0.5 * f64::from(k.order());
    let r = subordinate(plan, d_sq, |t| {
        t.powf(s) * product_integrand(&exps, t, x, y, d_sq)
    })?;
    Ok(scale(r, 1.0 / gamma(s)))
}

/// `∫₀^∞ t^{ℓ/2} |δ_ν^ℓ p_t^ν(x, y) - δ_{ν+1}^ℓ p_t^{ν+1}(x, y)| dt/t` in one
/// dimension (no `Γ` normalisation).
pub fn difference_integral_abs(
    nu: f64,
    ell: u32,
    x: f64,
    y: f64,
    plan: &SubordinationPlan,
) -> Result<Subordinated> {
    let nuv = NuVector::scalar(nu)?;
    let d_sq = check_kernel_args(&nuv, &MultiIndex(vec![ell.max(1)]), &[x], &[y])?;
    let e = HeatKernelExpansion::order_difference(nu, ell);
    let s = 0.5 * f64::from(ell);
    subordinate(plan, d_sq, |t| {
        t.powf(s) * product_integrand(std::slice::from_ref(&e), t, &[x], &[y], d_sq).abs()
    })
}

/// Kernel of `Δ_ν^{-s}` at `x ≠ y` (finite when `s < n/2` or the orders make
/// the large-time decay integrable).
pub fn fractional_kernel(
    nu: &NuVector,
    s: f64,
    x: &[f64],
    y: &[f64],
    plan: &SubordinationPlan,
) -> Result<Subordinated> {
    if !(s > 0.0) {
        return Err(domain(format!(
            "fractional power must be positive, got {s}"
        )));
    }
    let d_sq = check_kernel_args(nu, &MultiIndex(vec![1; nu.dim()]), x, y)?;
    let r = subordinate(plan, d_sq, |t| {
        let arg = d_sq / (4.0 * t);
        if arg > 700.0 {
            return 0.0;
        }
        let p: f64 = nu
            .as_slice()
            .iter()
            .enumerate()
            .map(|(j, &v)| reduced_unchecked(v, t, x[j], y[j]))
            .product();
        t.powf(s) * p * (-arg).exp()
    })?;
    Ok(scale(r, 1.0 / gamma(s)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Kernel of `δ_{1/2} Δ_{1/2}^{-1/2}` on the half-line: the square root of
    /// the Dirichlet Laplacian has kernel `π^{-1} ln((x+y)/|x-y|)`.
    fn dirichlet_riesz(x: f64, y: f64) -> f64 {
        let pi = std::f64::consts::PI;
        (2.0 * y / (y * y - x * x) - ((x + y) / (x - y).abs()).ln() / x) / pi
    }

    #[test]
    fn matches_half_order_closed_form() {
        let nu = NuVector::scalar(0.5).unwrap();
        let k = MultiIndex::new(vec![1]).unwrap();
        let plan = SubordinationPlan::default();
        for &(x, y) in &[(1.0, 3.0), (0.2, 0.25), (7.0, 1.5), (0.05, 12.0)] {
            let r = riesz_kernel(&nu, &k, &[x], &[y], &plan).unwrap();
            let want = dirichlet_riesz(x, y);
            assert!(
                (r.value - want).abs() < 1e-8 * want.abs().max(1.0),
                "{x} {y}: {} vs {want}",
                r.value
            );
        }
    }

    #[test]
    fn plans_agree() {
        let nu = NuVector::new(vec![0.5, 1.5]).unwrap();
        let k = MultiIndex::new(vec![1, 1]).unwrap();
        let a = SubordinationPlan::default();
        let b = SubordinationPlan {
            transform: Transform::DoubleExponential,
            ..a.clone()
        };
        let (x, y) = ([1.0, 2.0], [1.4, 1.1]);
        let ra = riesz_kernel(&nu, &k, &x, &y, &a).unwrap();
        let rb = riesz_kernel(&nu, &k, &x, &y, &b).unwrap();
        let rr = riesz_kernel(&nu, &k, &x, &y, &a.refined()).unwrap();
        assert!(
            (ra.value - rb.value).abs() <= 1e-6 + ra.tail_error + rb.tail_error,
            "{ra:?} {rb:?} {rr:?}"
        );
        assert!((ra.value - rr.value).abs() <= 5e-3 * ra.value.abs());
    }

    #[test]
    fn rejects_diagonal_and_zero_order() {
        let nu = NuVector::scalar(0.5).unwrap();
        let plan = SubordinationPlan::default();
        let k = MultiIndex::new(vec![1]).unwrap();
        assert!(riesz_kernel(&nu, &k, &[1.0], &[1.0], &plan).is_err());
        let k0 = MultiIndex::new(vec![0]).unwrap();
        assert!(riesz_kernel(&nu, &k0, &[1.0], &[2.0], &plan).is_err());
        assert!(SubordinationPlan::new(1.0, 0.5, 8, Transform::LogUniform).is_err());
    }

    #[test]
    fn power_law_integral_with_tail() {
        // ∫₀^∞ t/(1+t)² dt/t = 1, with a 1/t tail beyond t_max
        let plan = SubordinationPlan::new(1e-8, 1e3, 24, Transform::LogUniform).unwrap();
        let r = subordinate(&plan, 0.0, |t| t / ((1.0 + t) * (1.0 + t))).unwrap();
        assert!((r.value - 1.0).abs() <= r.tail_error + 1e-8, "{r:?}");
        assert!(r.tail_error < 1e-5);
    }

    #[test]
    fn difference_kernel_vanishes_for_equal_orders_elsewhere() {
        // shifting an axis with k_j = 0 and the same order leaves p^{ν}-p^{ν+1}
        let nu = NuVector::scalar(0.6).unwrap();
        let k = MultiIndex::new(vec![1]).unwrap();
        let plan = SubordinationPlan::default();
        let d = riesz_difference_kernel(&nu, &k, 0, &[1.0], &[2.0], &plan).unwrap();
        let a = riesz_kernel(&nu, &k, &[1.0], &[2.0], &plan).unwrap();
        let b = riesz_kernel(&NuVector::scalar(1.6).unwrap(), &k, &[1.0], &[2.0], &plan).unwrap();
        assert!((d.value - (a.value - b.value)).abs() < 1e-9);
    }

    #[test]
    fn fractional_kernel_of_dirichlet_square_root() {
        let nu = NuVector::scalar(0.5).unwrap();
        let plan = SubordinationPlan::default();
        let (x, y) = (1.0_f64, 2.5_f64);
        let r = fractional_kernel(&nu, 0.5, &[x], &[y], &plan).unwrap();
        let want = ((x + y) / (x - y).abs()).ln() / std::f64::consts::PI;
        assert!((r.value - want).abs() < 1e-8);
    }
}
