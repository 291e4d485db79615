//! Deterministic pseudorandom sampling shared by probes and direction sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Vector with independent entries uniform in `[-1, 1)`.
pub fn uniform_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Unit vector, drawn uniformly from the cube and normalized; near-zero draws are rejected.
pub fn unit_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v = uniform_vec(rng, n);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// `count` points uniform in the cube of half-width `radius` around `center`.
pub fn points_around(center: &[f64], radius: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            center
                .iter()
                .map(|c| c + radius * rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect()
}

/// `count` points uniform in `[-1, 1]^n`.
pub fn unit_cube_points(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    points_around(&vec![0.0; n], 1.0, count, seed)
}
