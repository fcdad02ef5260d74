//! Heat kernels of the Bessel operator on `(0, ∞)^n`.
//!
//! The 1-D kernel is
//! `p_t^ν(x, y) = sqrt(xy) / (2t) · exp(-(x-y)²/4t) · [e^{-z} I_ν(z)]`, `z = xy/2t`,
//! which is the textbook formula with `exp(-(x²+y²)/4t)` and `e^{z}` merged.
//! The *reduced* kernel drops the Gaussian factor `exp(-(x-y)²/4t)`; every
//! derivative of the kernel shares that factor, so bound checks divide it out
//! analytically instead of comparing two underflowing numbers.

mod bounds;
mod expansion;

use serde::{Deserialize, Serialize};

pub use bounds::{bound_rhs, bound_rhs_reduced, BoundKind, BoundParams};
pub use expansion::{partial_to_delta_coeffs, HeatKernelExpansion, Op, Term};

use crate::error::{domain, Result};
use crate::special::scaled_unchecked;

/// Order vector `ν ∈ (-1/2, ∞)^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct NuVector(Vec<f64>);

impl NuVector {
    pub fn new(nu: Vec<f64>) -> Result<Self> {
        if nu.is_empty() {
            return Err(domain("order vector must have at least one component"));
        }
        if let Some(bad) = nu.iter().find(|v| !(**v > -0.5) || !v.is_finite()) {
            return Err(domain(format!(
                "order components must exceed -1/2, got {bad}"
            )));
        }
        Ok(Self(nu))
    }

    pub fn scalar(nu: f64) -> Result<Self> {
        Self::new(vec![nu])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn nu_min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `ν_min + 1/2`.
    pub fn gamma(&self) -> f64 {
        self.nu_min() + 0.5
    }

    /// The same vector with every component raised by `shift[j]`.
    pub fn shifted(&self, shift: &[f64]) -> Result<Self> {
        Self::new(self.0.iter().zip(shift).map(|(a, b)| a + b).collect())
    }
}

impl TryFrom<Vec<f64>> for NuVector {
    type Error = crate::Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<NuVector> for Vec<f64> {
    fn from(v: NuVector) -> Self {
        v.0
    }
}

/// A time and a pair of points in `(0, ∞)^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl KernelPoint {
    pub fn new(t: f64, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(domain(format!("time must be positive, got {t}")));
        }
        if x.len() != y.len() || x.is_empty() {
            return Err(domain("x and y must have the same positive dimension"));
        }
        if x.iter().chain(&y).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(domain(
                "kernel points must have strictly positive coordinates",
            ));
        }
        Ok(Self { t, x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `|x - y|²`.
    pub fn dist_sq(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

pub(crate) fn check_args(t: f64, x: f64, y: f64) -> Result<()> {
    if !(t > 0.0 && x > 0.0 && y > 0.0) || !(t.is_finite() && x.is_finite() && y.is_finite()) {
        return Err(domain(format!(
            "heat kernel needs t, x, y > 0, got t={t}, x={x}, y={y}"
        )));
    }
    Ok(())
}

fn check_order(nu: f64) -> Result<()> {
    if !(nu > -1.0) || !nu.is_finite() {
        return Err(domain(format!("kernel order must exceed -1, got {nu}")));
    }
    Ok(())
}

/// `p_t^ν(x, y) · exp((x-y)²/4t)`, without argument checks.
#[inline]
pub(crate) fn reduced_unchecked(nu: f64, t: f64, x: f64, y: f64) -> f64 {
    let z = x * y / (2.0 * t);
    (x * y).sqrt() / (2.0 * t) * scaled_unchecked(nu, z)
}

#[inline]
pub(crate) fn gauss(t: f64, x: f64, y: f64) -> f64 {
    (-(x - y) * (x - y) / (4.0 * t)).exp()
}

/// The 1-D heat kernel `p_t^ν(x, y)`; orders down to `ν > -1` are accepted.
pub fn heat_kernel_1d(nu: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    check_order(nu)?;
    check_args(t, x, y)?;
    Ok(reduced_unchecked(nu, t, x, y) * gauss(t, x, y))
}

/// `p_t^ν(x, y) · exp((x-y)²/4t)`.
pub fn heat_kernel_1d_reduced(nu: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    check_order(nu)?;
    check_args(t, x, y)?;
    Ok(reduced_unchecked(nu, t, x, y))
}

fn check_point(nu: &NuVector, q: &KernelPoint) -> Result<()> {
    if nu.dim() != q.dim() {
        return Err(domain(format!(
            "order vector has dimension {} but the point has dimension {}",
            nu.dim(),
            q.dim()
        )));
    }
    Ok(())
}

/// The product kernel `Π_j p_t^{ν_j}(x_j, y_j)`.
pub fn heat_kernel_nd(nu: &NuVector, q: &KernelPoint) -> Result<f64> {
    Ok(heat_kernel_nd_reduced(nu, q)? * (-q.dist_sq() / (4.0 * q.t)).exp())
}

/// The product kernel with the Gaussian `exp(-|x-y|²/4t)` removed.
pub fn heat_kernel_nd_reduced(nu: &NuVector, q: &KernelPoint) -> Result<f64> {
    check_point(nu, q)?;
    Ok(nu
        .as_slice()
        .iter()
        .zip(q.x.iter().zip(&q.y))
        .map(|(&n, (&x, &y))| reduced_unchecked(n, q.t, x, y))
        .product())
}

/// `δ_ν^k p_t^ν(x, y)` for a multi-index `k`, one expansion per coordinate.
pub fn delta_heat_kernel_nd(nu: &NuVector, k: &[u32], q: &KernelPoint) -> Result<f64> {
    Ok(delta_heat_kernel_nd_reduced(nu, k, q)? * (-q.dist_sq() / (4.0 * q.t)).exp())
}

/// [`delta_heat_kernel_nd`] with the Gaussian factor removed.
pub fn delta_heat_kernel_nd_reduced(nu: &NuVector, k: &[u32], q: &KernelPoint) -> Result<f64> {
    check_point(nu, q)?;
    if k.len() != q.dim() {
        return Err(domain("multi-index dimension does not match the point"));
    }
    let mut value = 1.0;
    for (j, (&n, &kj)) in nu.as_slice().iter().zip(k).enumerate() {
        let e = HeatKernelExpansion::delta_power(n, kj);
        value *= e.eval_reduced(q.t, q.x[j], q.y[j]);
    }
    Ok(value)
}

/// `∂_x^k δ_ν^ℓ p_t^ν(x, y)` in one dimension, through the constant table
/// `∂^k = Σ_j c_j x^{-j} δ_ν^{k-j}`.
pub fn mixed_partial_delta(nu: f64, k: u32, ell: u32, t: f64, x: f64, y: f64) -> Result<f64> {
    Ok(mixed_partial_delta_reduced(nu, k, ell, t, x, y)? * gauss(t, x, y))
}

/// [`mixed_partial_delta`] with the Gaussian factor removed.
pub fn mixed_partial_delta_reduced(
    nu: f64,
    k: u32,
    ell: u32,
    t: f64,
    x: f64,
    y: f64,
) -> Result<f64> {
    check_order(nu)?;
    check_args(t, x, y)?;
    let coeffs = partial_to_delta_coeffs(nu, k);
    let mut total = 0.0;
    for (j, c) in coeffs.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let e = HeatKernelExpansion::delta_power(nu, k + ell - j as u32);
        total += c * x.powi(-(j as i32)) * e.eval_reduced(t, x, y);
    }
    Ok(total)
}

/// Multinomial splitting of `(Σ_j Δ_j)^M` into per-coordinate powers.
pub(crate) fn compositions(n: usize, m: u32) -> Vec<(f64, Vec<u32>)> {
    fn rec(n: usize, m: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n - 1 {
            prefix.push(m);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in 0..=m {
            prefix.push(i);
            rec(n, m - i, prefix, out);
            prefix.pop();
        }
    }
    let mut parts = Vec::new();
    rec(n, m, &mut Vec::new(), &mut parts);
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    parts
        .into_iter()
        .map(|p| {
            let denom: f64 = p.iter().map(|&v| fact(v)).product();
            (fact(m) / denom, p)
        })
        .collect()
}

/// Reduced value of a sum over `(Σ_j Δ_{ν_j})^M` splittings, where `build`
/// returns the per-coordinate expansion for coordinate `j` and power `m_j`.
pub(crate) fn multinomial_reduced<F>(q: &KernelPoint, m: u32, build: F) -> f64
where
    F: Fn(usize, u32) -> HeatKernelExpansion,
{
    let n = q.dim();
    let mut cache: Vec<Vec<Option<f64>>> = vec![vec![None; m as usize + 1]; n];
    let mut total = 0.0;
    for (coef, parts) in compositions(n, m) {
        let mut prod = coef;
        for (j, &mj) in parts.iter().enumerate() {
            let slot = &mut cache[j][mj as usize];
            let v = *slot.get_or_insert_with(|| build(j, mj).eval_reduced(q.t, q.x[j], q.y[j]));
            prod *= v;
        }
        total += prod;
    }
    total
}

/// `δ_ν^k Δ_ν^M p_t^ν(x, y)` with the Gaussian removed; operators act on `x`.
pub fn delta_laplacian_reduced(nu: &NuVector, k: &[u32], m: u32, q: &KernelPoint) -> Result<f64> {
    check_point(nu, q)?;
    let nus = nu.as_slice();
    Ok(multinomial_reduced(q, m, |j, mj| {
        let mut ops = vec![Op::Laplacian(nus[j]); mj as usize];
        ops.extend(std::iter::repeat_n(Op::Delta(nus[j]), k[j] as usize));
        HeatKernelExpansion::from_ops(nus[j], &ops)
    }))
}

/// `Δ_ν^M (δ_ν^*)^k p_t^{ν+k+2M}(x, y)` with the Gaussian removed; operators
/// act on `x`.
pub fn laplacian_delta_star_reduced(
    nu: &NuVector,
    k: &[u32],
    m: u32,
    q: &KernelPoint,
) -> Result<f64> {
    check_point(nu, q)?;
    let nus = nu.as_slice();
    Ok(multinomial_reduced(q, m, |j, mj| {
        let base = nus[j] + f64::from(k[j]) + 2.0 * f64::from(m);
        let mut ops = vec![Op::DeltaStar(nus[j]); k[j] as usize];
        ops.extend(std::iter::repeat_n(Op::Laplacian(nus[j]), mj as usize));
        HeatKernelExpansion::from_ops(base, &ops)
    }))
}

/// `∂_x^k δ_ν^ℓ p_t^ν(x, y)` in `n` dimensions with the Gaussian removed.
pub fn mixed_partial_delta_nd_reduced(
    nu: &NuVector,
    k: &[u32],
    ell: &[u32],
    q: &KernelPoint,
) -> Result<f64> {
    check_point(nu, q)?;
    let mut value = 1.0;
    for j in 0..q.dim() {
        value *= mixed_partial_delta_reduced(nu.as_slice()[j], k[j], ell[j], q.t, q.x[j], q.y[j])?;
    }
    Ok(value)
}

/// `δ_ν^ℓ p_t^ν - δ_{ν+1}^ℓ p_t^{ν+1}` in one dimension, Gaussian removed.
pub fn order_difference_reduced(nu: f64, ell: u32, t: f64, x: f64, y: f64) -> Result<f64> {
    check_order(nu)?;
    check_args(t, x, y)?;
    Ok(HeatKernelExpansion::order_difference(nu, ell).eval_reduced(t, x, y))
}
