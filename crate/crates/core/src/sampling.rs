//! Deterministic random and quasi-random sampling helpers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream seed from a base seed and a stream index.
pub fn substream(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Radical inverse of `index` in the given base.
pub fn halton(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % b) as f64;
        index /= b;
    }
    r
}

pub fn halton_point(index: u64, dim: usize) -> Vec<f64> {
    (0..dim).map(|d| halton(index, PRIMES[d % PRIMES.len()])).collect()
}

/// Maps a point of the unit cube onto the closed ball of radius `radius`
/// (concentric square-to-disc map; the identity on the segment for dim 1).
pub fn cube_to_ball(u: &[f64], radius: f64) -> Vec<f64> {
    let y: Vec<f64> = u.iter().map(|&v| 2.0 * v - 1.0).collect();
    if y.len() == 1 {
        return vec![radius * y[0]];
    }
    let n2 = norm(&y);
    if n2 == 0.0 {
        return vec![0.0; y.len()];
    }
    let ninf = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    y.iter().map(|v| radius * v * ninf / n2).collect()
}

/// Quasi-random point `index` of the ball of radius `radius`.
pub fn halton_ball(index: u64, dim: usize, radius: f64) -> Vec<f64> {
    cube_to_ball(&halton_point(index, dim), radius)
}

pub fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Uniform sample of the closed ball.
pub fn random_in_ball<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    let dir = random_unit(rng, dim);
    let r = radius * rng.gen::<f64>().powf(1.0 / dim as f64);
    dir.iter().map(|d| d * r).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
