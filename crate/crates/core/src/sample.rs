//! Seeded sampling helpers shared by the test batteries and the CLI.

use crate::scalar::Real;
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// The RNG every randomized routine in this crate uses; fixed stream per seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal deviate via Box-Muller.
pub fn gauss<R: Real>(rng: &mut impl Rng) -> R {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    R::of((-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos())
}

/// Vector of iid standard normals.
pub fn gauss_vector<R: Real>(dim: usize, rng: &mut impl Rng) -> DVector<R> {
    DVector::from_fn(dim, |_, _| gauss(rng))
}

/// Uniform sample from the standard probability simplex (flat Dirichlet).
pub fn dirichlet<R: Real>(len: usize, rng: &mut impl Rng) -> Vec<R> {
    assert!(len > 0);
    let mut raw = vec![0.0f64; len];
    let mut total = 0.0;
    for r in raw.iter_mut() {
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        *r = -u.ln();
        total += *r;
    }
    raw.into_iter().map(|r| R::of(r / total)).collect()
}

/// Uniform scalar in `[lo, hi)`.
pub fn uniform<R: Real>(lo: f64, hi: f64, rng: &mut impl Rng) -> R {
    R::of(rng.gen_range(lo..hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_sums_to_one() {
        let mut rng = rng_from_seed(7);
        for _ in 0..100 {
            let w: Vec<f64> = dirichlet(4, &mut rng);
            let s: f64 = w.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<f64> = (0..10).map(|_| gauss(&mut rng_from_seed(3))).collect();
        let b: Vec<f64> = (0..10).map(|_| gauss(&mut rng_from_seed(3))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn gauss_moments_are_plausible() {
        let mut rng = rng_from_seed(11);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| gauss(&mut rng)).collect();
        let mean: f64 = xs.iter().sum::<f64>() / n as f64;
        let var: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.05);
        assert!((var - 1.0).abs() < 0.05);
    }
}
