//! Deterministic random states for experiments and regression tests.
//!
//! ChaCha8 keyed by a 64-bit seed; complex Gaussian entries normalized to a
//! unit vector. Identical seeds give identical states on every platform.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::spectral::{CoeffVector, Parity};

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    // 53 random mantissa bits
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; guard the log away from 0
    let u1 = (1.0 - uniform01(rng)).max(f64::MIN_POSITIVE);
    let u2 = uniform01(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Unit-norm complex state with `len` modes drawn from seed `seed`.
pub fn unit_state(seed: u64, parity: Parity, len: usize, r: f64) -> CoeffVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(standard_normal(&mut rng), standard_normal(&mut rng)))
        .collect();
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for c in coeffs.iter_mut() {
            *c /= Complex64::new(norm, 0.0);
        }
    }
    CoeffVector::new(parity, r, coeffs)
}
