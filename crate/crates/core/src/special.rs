//! Gamma function and modified Bessel functions of the first kind.
//!
//! `I_α(z)` is evaluated from its power series for moderate arguments and from
//! the large-argument expansion `e^z / sqrt(2πz) · Σ (-1)^k a_k(α) / z^k`
//! otherwise. The scaled form `e^{-z} I_α(z)` is the primitive everything else
//! is built on, so that heat kernels never form `e^{xy/2t}` explicitly.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument only the power series is used.
pub(crate) const ASYMPTOTIC_MIN_Z: f64 = 25.0;
const SERIES_MAX_TERMS: usize = 500;
const SERIES_REL_TOL: f64 = 1e-17;
const RESCALE: f64 = 1e280;

fn lanczos_sum(x: f64) -> f64 {
    LANCZOS_COEFFS
        .iter()
        .enumerate()
        .skip(1)
        .fold(LANCZOS_COEFFS[0], |acc, (i, &c)| acc + c / (x + i as f64))
}

/// Gamma function via the Lanczos approximation (g = 7, 9 terms) with
/// reflection for `x < 1/2`.
pub fn gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == x.floor() && x <= 0.0 {
        return f64::NAN;
    }
    if x < 0.5 {
        let s = (std::f64::consts::PI * x).sin();
        return std::f64::consts::PI / (s * gamma(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    if x == x.floor() {
        return (2..x as u32).fold(1.0, |acc, k| acc * f64::from(k));
    }
    if x > 140.0 {
        return ln_gamma(x).exp();
    }
    let xm = x - 1.0;
    let t = xm + LANCZOS_G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(xm + 0.5) * (-t).exp() * lanczos_sum(xm)
}

/// `ln |Γ(x)|`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let s = (std::f64::consts::PI * x).sin().abs();
        return std::f64::consts::PI.ln() - s.ln() - ln_gamma(1.0 - x);
    }
    let xm = x - 1.0;
    let t = xm + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (xm + 0.5) * t.ln() - t + lanczos_sum(xm).ln()
}

/// Order of a modified Bessel function; the series definition needs `α > -1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(domain(format!("Bessel order must exceed -1, got {alpha}")));
        }
        Ok(Self(alpha))
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

/// All three normalisations of `I_α(z)` at one argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselEval {
    /// `I_α(z)`; `+inf` once `e^z` leaves the representable range.
    pub value: f64,
    /// `e^{-z} I_α(z)`.
    pub scaled_value: f64,
    /// `z^{-α} I_α(z)`; `+inf` once it leaves the representable range.
    pub ratio_value: f64,
}

impl BesselEval {
    pub fn new(order: BesselOrder, z: f64) -> Result<Self> {
        check_arg(z)?;
        let scaled_value = besseli_scaled(order, z)?;
        let value = besseli(order, z).unwrap_or(f64::INFINITY);
        let ratio_value = besseli_ratio(order, z).unwrap_or(f64::INFINITY);
        Ok(Self {
            value,
            scaled_value,
            ratio_value,
        })
    }
}

fn check_arg(z: f64) -> Result<()> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(domain(format!(
            "Bessel argument must be finite and >= 0, got {z}"
        )));
    }
    Ok(())
}

/// Sum of `Σ_k (z²/4)^k / (k! (α+1)_k)`, returned as `(mantissa, rescale_count)`
/// with the true value `mantissa · RESCALE^count`.
fn series_sum(alpha: f64, z: f64) -> Result<(f64, i32)> {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut scale = 0;
    for k in 1..=SERIES_MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * (alpha + kf));
        sum += term;
        if term < SERIES_REL_TOL * sum {
            return Ok((sum, scale));
        }
        if sum > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            scale += 1;
        }
    }
    Err(Error::NonConvergence(format!(
        "I_{alpha}({z}) power series exceeded {SERIES_MAX_TERMS} terms"
    )))
}

/// `e^{-z} I_α(z)` from the power series.
pub(crate) fn scaled_from_series(alpha: f64, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(zero_arg_value(alpha));
    }
    let (sum, scale) = series_sum(alpha, z)?;
    let direct = (0.5 * z).powf(alpha) / gamma(alpha + 1.0) * (-z).exp();
    if scale == 0 && direct.is_normal() {
        return Ok(direct * sum);
    }
    let log_pref = alpha * (0.5 * z).ln() - ln_gamma(alpha + 1.0) - z
        + f64::from(scale) * RESCALE.ln()
        + sum.ln();
    Ok(log_pref.exp())
}

/// `e^{-z} I_α(z)` from the large-argument expansion, or `None` when the
/// expansion does not reach machine precision before it starts to diverge.
pub(crate) fn scaled_from_asymptotic(alpha: f64, z: f64) -> Option<f64> {
    let mu = 4.0 * alpha * alpha;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut largest = 1.0_f64;
    let k_max = (2.0 * z).min(400.0) as usize;
    for k in 1..=k_max {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (8.0 * k as f64 * z);
        sum += term;
        largest = largest.max(term.abs());
        if largest > 1e3 {
            return None;
        }
        if term == 0.0 || (k >= 8 && term.abs() < SERIES_REL_TOL * sum.abs()) {
            return Some(sum / (2.0 * std::f64::consts::PI * z).sqrt());
        }
    }
    None
}

fn zero_arg_value(alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else if alpha > 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `e^{-z} I_α(z)`, finite for every representable `z`.
pub fn besseli_scaled(order: BesselOrder, z: f64) -> Result<f64> {
    check_arg(z)?;
    let alpha = order.alpha();
    if z > ASYMPTOTIC_MIN_Z {
        if let Some(v) = scaled_from_asymptotic(alpha, z) {
            return Ok(v);
        }
    }
    scaled_from_series(alpha, z)
}

/// `I_α(z)`. Fails with [`Error::Overflow`] when `e^z` is not representable;
/// use [`besseli_scaled`] there.
pub fn besseli(order: BesselOrder, z: f64) -> Result<f64> {
    let scaled = besseli_scaled(order, z)?;
    if z > 709.0 {
        return Err(Error::Overflow(format!(
            "I_{}({z}) exceeds the f64 range; use the scaled form",
            order.alpha()
        )));
    }
    let v = scaled * z.exp();
    if v.is_infinite() {
        return Err(Error::Overflow(format!(
            "I_{}({z}) overflows",
            order.alpha()
        )));
    }
    Ok(v)
}

/// `z^{-α} I_α(z)`, equal to `1 / (2^α Γ(α+1))` at `z = 0`.
pub fn besseli_ratio(order: BesselOrder, z: f64) -> Result<f64> {
    check_arg(z)?;
    let alpha = order.alpha();
    if z <= ASYMPTOTIC_MIN_Z {
        let (sum, scale) = series_sum(alpha, z)?;
        let pref = 0.5_f64.powf(alpha) / gamma(alpha + 1.0);
        return Ok(pref * sum * RESCALE.powi(scale));
    }
    let scaled = besseli_scaled(order, z)?;
    let v = (z - alpha * z.ln()).exp() * scaled;
    if v.is_infinite() {
        return Err(Error::Overflow(format!(
            "z^-α I_α(z) overflows at α={alpha}, z={z}"
        )));
    }
    Ok(v)
}

/// Scaled Bessel value for an order that is already known to be valid.
#[inline]
pub(crate) fn scaled_unchecked(alpha: f64, z: f64) -> f64 {
    if z > ASYMPTOTIC_MIN_Z {
        if let Some(v) = scaled_from_asymptotic(alpha, z) {
            return v;
        }
    }
    scaled_from_series(alpha, z).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn order(a: f64) -> BesselOrder {
        BesselOrder::new(a).unwrap()
    }

    fn direct_series(alpha: f64, z: f64, terms: usize) -> f64 {
        (0..terms)
            .map(|k| {
                let kf = k as f64;
                (0.5 * z).powf(alpha + 2.0 * kf) / (gamma(kf + 1.0) * gamma(alpha + kf + 1.0))
            })
            .sum()
    }

    #[test]
    fn gamma_integers_and_half_integers() {
        let mut fact = 1.0;
        for n in 1..20 {
            assert_relative_eq!(gamma(n as f64), fact, max_relative = 1e-13);
            fact *= n as f64;
        }
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert_relative_eq!(gamma(0.5), sqrt_pi, max_relative = 1e-13);
        assert_relative_eq!(gamma(1.5), 0.5 * sqrt_pi, max_relative = 1e-13);
        assert_relative_eq!(gamma(4.5), 11.631_728_396_567_45, max_relative = 1e-13);
        assert_relative_eq!(gamma(-0.5), -2.0 * sqrt_pi, max_relative = 1e-13);
        assert_relative_eq!(gamma(0.3), 2.991_568_987_687_59, max_relative = 1e-13);
        assert_relative_eq!(ln_gamma(150.0), 600.009_470_555_327_4, max_relative = 1e-13);
    }

    #[test]
    fn order_domain() {
        assert!(BesselOrder::new(-1.0).is_err());
        assert!(BesselOrder::new(-0.99).is_ok());
        assert!(BesselOrder::new(f64::NAN).is_err());
    }

    #[test]
    fn besseli_examples() {
        assert_eq!(besseli(order(0.0), 0.0).unwrap(), 1.0);
        // closed form sqrt(2/(πz)) sinh z, cross-checked against 50 series terms
        let closed = (2.0 / std::f64::consts::PI).sqrt() * 1.0_f64.sinh();
        assert_relative_eq!(closed, direct_series(0.5, 1.0, 50), max_relative = 1e-14);
        assert_relative_eq!(
            besseli(order(0.5), 1.0).unwrap(),
            closed,
            max_relative = 1e-14
        );
        assert!((closed - 0.937_674).abs() < 1e-6);
        let lead = 1.0 / (2.0 * std::f64::consts::PI * 40.0).sqrt();
        let s = besseli_scaled(order(1.0), 40.0).unwrap();
        assert!((s / lead - 1.0).abs() < 0.01);
    }

    #[test]
    fn scaled_examples() {
        assert_eq!(besseli_scaled(order(0.0), 0.0).unwrap(), 1.0);
        let expected = (-(-200.0_f64).exp_m1()) / (200.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(
            besseli_scaled(order(0.5), 100.0).unwrap(),
            expected,
            max_relative = 1e-14
        );
        let big = besseli_scaled(order(3.0), 1e6).unwrap();
        assert!(big.is_finite() && big > 0.0);
        assert!(matches!(besseli(order(3.0), 1e6), Err(Error::Overflow(_))));
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(besseli_ratio(order(0.0), 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            besseli_ratio(order(1.0), 0.0).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        let z: f64 = 2.3;
        let oracle = direct_series(0.7, z, 60) * z.powf(-0.7);
        assert_relative_eq!(
            besseli_ratio(order(0.7), z).unwrap(),
            oracle,
            max_relative = 1e-13
        );
    }

    #[test]
    fn negative_orders_accepted() {
        // I_{-1/2}(z) = sqrt(2/(πz)) cosh z
        let z: f64 = 3.0;
        let closed = (2.0 / (std::f64::consts::PI * z)).sqrt() * z.cosh();
        assert_relative_eq!(
            besseli(order(-0.5), z).unwrap(),
            closed,
            max_relative = 1e-13
        );
        assert!(besseli(order(-0.7), 0.5).unwrap() > 0.0);
        assert_eq!(besseli_scaled(order(-0.7), 0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn regimes_agree_in_overlap_window() {
        for &alpha in &[0.0, 0.5, 1.0, 2.3, -0.3, 4.0] {
            let mut z = 25.5;
            while z < 40.0 {
                let a = scaled_from_asymptotic(alpha, z).expect("asymptotic converges");
                let s = scaled_from_series(alpha, z).unwrap();
                assert!(
                    (a / s - 1.0).abs() < 1e-10,
                    "alpha={alpha} z={z}: {a} vs {s}"
                );
                z += 1.25;
            }
        }
    }

    #[test]
    fn large_order_falls_back_to_series() {
        assert!(scaled_from_asymptotic(40.0, 30.0).is_none());
        for alpha in [15.0, 40.0] {
            let v = besseli_scaled(order(alpha), 30.0).unwrap();
            let oracle = direct_series(alpha, 30.0, 100) * (-30.0_f64).exp();
            assert_relative_eq!(v, oracle, max_relative = 1e-12);
        }
    }

    #[test]
    fn small_argument_bounds() {
        for &alpha in &[-0.4, 0.0, 0.5, 1.3, 3.0] {
            let lead = 1.0 / (2.0_f64.powf(alpha) * gamma(alpha + 1.0));
            for i in 1..=20 {
                let z = i as f64 / 20.0;
                let r = besseli_ratio(order(alpha), z).unwrap();
                assert!(r >= lead * (1.0 - 1e-14) && r <= lead * (z * z).exp());
            }
        }
    }

    #[test]
    fn order_monotonicity() {
        for &alpha in &[-0.4, 0.0, 0.7, 2.0] {
            for &z in &[0.0, 0.01, 0.5, 3.0, 20.0, 60.0, 500.0] {
                let lo = besseli_scaled(order(alpha + 1.0), z).unwrap();
                let hi = besseli_scaled(order(alpha), z).unwrap();
                assert!(lo <= hi, "alpha={alpha} z={z}");
            }
        }
    }
}
