//! Objectives for the pointwise kernel inequalities.

use super::engine::{log_depth, log_map, Evaluation, Objective};
use crate::error::Result;
use crate::heat::{
    bound_rhs_reduced, delta_heat_kernel_nd_reduced, delta_laplacian_reduced,
    heat_kernel_nd_reduced, laplacian_delta_star_reduced, mixed_partial_delta_nd_reduced,
    order_difference_reduced, BoundKind, BoundParams, KernelPoint, NuVector,
};
use crate::riesz::{difference_integral_abs, SubordinationPlan};

/// Which reduced left-hand side a Gaussian campaign samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Lhs {
    Kernel,
    Delta,
    MixedPartial,
    DeltaLaplacian,
    LaplacianDeltaStar,
    /// Larger of the two forms, which share one bound.
    BothLaplacianForms,
    OrderDifference,
}

/// `|lhs| ≤ C · rhs · exp(-|x-y|²/ct)` over `(t, x, y)`, one column per rate.
pub(crate) struct GaussianObjective {
    pub nu: NuVector,
    pub params: BoundParams,
    pub kind: BoundKind,
    pub lhs: Lhs,
    pub rates: Vec<f64>,
    pub box_lo: f64,
    pub box_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl GaussianObjective {
    fn reduced_lhs(&self, q: &KernelPoint) -> Result<f64> {
        let p = &self.params;
        let nu0 = self.nu.as_slice()[0];
        Ok(match self.lhs {
            Lhs::Kernel => heat_kernel_nd_reduced(&self.nu, q)?,
            Lhs::Delta => delta_heat_kernel_nd_reduced(&self.nu, &p.ell, q)?,
            Lhs::MixedPartial => mixed_partial_delta_nd_reduced(&self.nu, &p.k, &p.ell, q)?,
            Lhs::DeltaLaplacian => delta_laplacian_reduced(&self.nu, &p.k, p.m, q)?,
            Lhs::LaplacianDeltaStar => laplacian_delta_star_reduced(&self.nu, &p.k, p.m, q)?,
            Lhs::BothLaplacianForms => delta_laplacian_reduced(&self.nu, &p.k, p.m, q)?
                .abs()
                .max(laplacian_delta_star_reduced(&self.nu, &p.k, p.m, q)?.abs()),
            Lhs::OrderDifference => order_difference_reduced(nu0, p.ell[0], q.t, q.x[0], q.y[0])?,
        })
    }

    /// The order-difference estimate only holds on `y/2 < x < 2y`, `x ≥ √t`.
    fn admissible(&self, q: &KernelPoint) -> bool {
        match self.lhs {
            Lhs::OrderDifference => {
                let (x, y) = (q.x[0], q.y[0]);
                y / 2.0 < x && x < 2.0 * y && x >= q.t.sqrt()
            }
            _ => true,
        }
    }
}

impl Objective for GaussianObjective {
    fn dim(&self) -> usize {
        1 + 2 * self.nu.dim()
    }

    fn columns(&self) -> usize {
        self.rates.len()
    }

    fn depth(&self, th: &[f64]) -> u32 {
        let t = log_depth(th[0], self.t_lo, self.t_hi);
        th[1..]
            .iter()
            .map(|&u| log_depth(u, self.box_lo, self.box_hi))
            .fold(t, u32::min)
    }

    fn eval(&self, th: &[f64]) -> Result<Option<Evaluation>> {
        let n = self.nu.dim();
        let t = log_map(th[0], self.t_lo, self.t_hi);
        let map = |u: &f64| log_map(*u, self.box_lo, self.box_hi);
        let x: Vec<f64> = th[1..=n].iter().map(map).collect();
        let y: Vec<f64> = th[n + 1..=2 * n].iter().map(map).collect();
        let q = KernelPoint::new(t, x, y)?;
        if !self.admissible(&q) {
            return Ok(None);
        }
        let lhs_red = self.reduced_lhs(&q)?.abs();
        let rhs_red = bound_rhs_reduced(self.kind, &self.nu, &self.params, &q)?;
        let a = q.dist_sq() / t;
        let lhs = lhs_red * (-a / 4.0).exp();
        let mut rhs = Vec::with_capacity(self.rates.len());
        let mut ratios = Vec::with_capacity(self.rates.len());
        for &c in &self.rates {
            rhs.push(rhs_red * (-a / c).exp());
            // the Gaussians are combined before exponentiating so the ratio
            // survives where both sides underflow
            ratios.push(lhs_red / rhs_red * (a * (1.0 / c - 0.25)).exp());
        }
        Ok(Some(Evaluation {
            t: Some(t),
            x: q.x,
            y: q.y,
            y_prime: None,
            lhs: vec![lhs; self.rates.len()],
            rhs,
            ratios,
            warning: !lhs_red.is_finite(),
        }))
    }
}

/// Time-integrated order difference against its three-region bound.
pub(crate) struct DifferenceIntegralObjective {
    pub nu: f64,
    pub k: u32,
    pub epsilon: f64,
    pub box_lo: f64,
    pub box_hi: f64,
    pub plan: SubordinationPlan,
}

/// `[1/x + (1/x)(x/|x-y|)^ε]` on `y/2 < x < 2y`, `1/x` on `x ≥ 2y`, `1/y` on
/// `y ≥ 2x`.
pub fn difference_region_bound(x: f64, y: f64, epsilon: f64) -> f64 {
    if x >= 2.0 * y {
        1.0 / x
    } else if y >= 2.0 * x {
        1.0 / y
    } else {
        (1.0 + (x / (x - y).abs()).powf(epsilon)) / x
    }
}

impl Objective for DifferenceIntegralObjective {
    fn dim(&self) -> usize {
        2
    }

    fn columns(&self) -> usize {
        1
    }

    fn depth(&self, th: &[f64]) -> u32 {
        th.iter()
            .map(|&u| log_depth(u, self.box_lo, self.box_hi))
            .fold(u32::MAX, u32::min)
    }

    fn eval(&self, th: &[f64]) -> Result<Option<Evaluation>> {
        let x = log_map(th[0], self.box_lo, self.box_hi);
        let y = log_map(th[1], self.box_lo, self.box_hi);
        if (x - y).abs() <= 1e-9 * x.max(y) {
            return Ok(None);
        }
        let r = difference_integral_abs(self.nu, self.k, x, y, &self.plan)?;
        let rhs = difference_region_bound(x, y, self.epsilon);
        Ok(Some(Evaluation {
            t: None,
            x: vec![x],
            y: vec![y],
            y_prime: None,
            lhs: vec![r.value],
            rhs: vec![rhs],
            ratios: vec![r.value / rhs],
            warning: r.tail_warning,
        }))
    }
}
