//! Seeded sampling helpers.
//!
//! All randomness goes through [`rng`], a ChaCha8 stream keyed by a `u64`
//! seed (`rand_chacha::ChaCha8Rng::seed_from_u64`). Its output is fixed
//! across platforms; the first two `u64` draws for seed 0 are pinned in the
//! tests below.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Log-uniform draw on `[lo, hi]`.
pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    (lo.ln() + u * (hi / lo).ln()).exp()
}

/// Point with independent log-uniform coordinates in `[lo, hi]^n`.
pub fn log_uniform_point<R: Rng>(rng: &mut R, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|_| log_uniform(rng, lo, hi)).collect()
}

/// Uniformly distributed unit vector in `ℝ^n`.
pub fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let r2: f64 = v.iter().map(|a| a * a).sum();
        if r2 > 1e-6 && r2 <= 1.0 {
            let r = r2.sqrt();
            return v.into_iter().map(|a| a / r).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn stream_is_pinned() {
        let mut r = rng(0);
        let a = r.next_u64();
        let b = r.next_u64();
        let mut r2 = rng(0);
        assert_eq!((a, b), (r2.next_u64(), r2.next_u64()));
        assert_eq!((a, b), TEST_VECTOR);
    }

    const TEST_VECTOR: (u64, u64) = (13_080_132_717_333_068_652, 8_594_738_769_458_413_623);

    #[test]
    fn log_uniform_in_range() {
        let mut r = rng(7);
        for _ in 0..1000 {
            let v = log_uniform(&mut r, 0.01, 20.0);
            assert!((0.01..=20.0).contains(&v));
        }
        let u = unit_vector(&mut r, 3);
        assert!((u.iter().map(|a| a * a).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
