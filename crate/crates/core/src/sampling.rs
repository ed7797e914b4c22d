//! Quasi-random points on the closed upper half-sphere.
//!
//! A Halton sequence in `[0,1)^{n+1}`, shifted by a seeded random vector
//! (Cranley-Patterson rotation), is pushed through the inverse normal CDF
//! and normalised. The sign of the last coordinate is then dropped, which
//! folds the uniform measure on `S^n` onto the half-sphere.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::geometry::SpherePoint;

const PRIMES: [u32; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    out
}

/// `count` points of the closed upper half-sphere `S^n_+`.
pub fn halfsphere_samples(n: usize, count: usize, seed: u64) -> Vec<SpherePoint> {
    let dim = n + 1;
    assert!(dim <= PRIMES.len(), "quasi-random sampling supports n <= {}", PRIMES.len() - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let normal = Normal::standard();
    let mut out = Vec::with_capacity(count);
    let mut idx: u64 = 1;
    while out.len() < count {
        let mut v = DVector::zeros(dim);
        for k in 0..dim {
            let u = (radical_inverse(idx, PRIMES[k]) + shift[k]).fract();
            let u = u.clamp(1e-300, 1.0 - 1e-16);
            v[k] = normal.inverse_cdf(u);
        }
        idx += 1;
        v[dim - 1] = v[dim - 1].abs();
        if v.norm() < 1e-12 {
            continue;
        }
        if let Ok(p) = SpherePoint::from_unnormalized(v) {
            out.push(p);
        }
    }
    out
}

/// Quasi-random points of the boundary sphere `{x_{n+1} = 0}`.
pub fn boundary_samples(n: usize, count: usize, seed: u64) -> Vec<SpherePoint> {
    let dim = n + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let shift: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let normal = Normal::standard();
    let mut out = Vec::with_capacity(count);
    let mut idx: u64 = 1;
    while out.len() < count {
        let mut v = DVector::zeros(dim);
        for k in 0..n {
            let u = (radical_inverse(idx, PRIMES[k]) + shift[k]).fract().clamp(1e-300, 1.0 - 1e-16);
            v[k] = normal.inverse_cdf(u);
        }
        idx += 1;
        if v.norm() < 1e-12 {
            continue;
        }
        if let Ok(p) = SpherePoint::from_unnormalized(v) {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_valid_and_seeded() {
        let a = halfsphere_samples(5, 200, 3);
        let b = halfsphere_samples(5, 200, 3);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.height() >= 0.0));
        let c = halfsphere_samples(5, 200, 4);
        assert_ne!(a, c);
        let mean_height: f64 = a.iter().map(|p| p.height()).sum::<f64>() / a.len() as f64;
        assert!(mean_height > 0.2 && mean_height < 0.45);
        let bd = boundary_samples(6, 50, 1);
        assert!(bd.iter().all(|p| p.is_boundary()));
    }
}
