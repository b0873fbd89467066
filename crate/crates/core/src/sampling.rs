//! Deterministic sample designs shared by the estimators.
//!
//! Every random draw comes from a ChaCha stream selected by `(seed, stream)`,
//! so results depend only on the seed and the budget, never on thread
//! scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Sample budget plus seed for the sample-scale estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampler {
    pub budget: usize,
    pub seed: u64,
}

impl Sampler {
    pub fn new(budget: usize, seed: u64) -> Self {
        Sampler { budget, seed }
    }
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            budget: 10_000,
            seed: 42,
        }
    }
}

// Stream ids are split into namespaces so unrelated designs sharing a seed
// never reuse a stream.
pub(crate) const STREAM_LHS: u64 = 1 << 56;
pub(crate) const STREAM_POINT: u64 = 2 << 56;
pub(crate) const STREAM_MISC: u64 = 3 << 56;

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Nested Latin-hypercube design in `[0, 1)^dim`.
///
/// Points are produced in blocks of sizes `1, 1, 2, 4, 8, …`; each block is
/// its own Latin hypercube. The first `count` points of the design never
/// depend on `count`, so a larger budget always yields a superset of the
/// points of a smaller one.
pub fn nested_lhs(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut block = 0u64;
    while out.len() < count {
        let size = if block == 0 { 1 } else { 1usize << (block - 1) };
        let mut rng = rng_for(seed, STREAM_LHS + block);
        let perms: Vec<Vec<usize>> = (0..dim).map(|_| permutation(size, &mut rng)).collect();
        for k in 0..size {
            if out.len() == count {
                break;
            }
            let p = (0..dim)
                .map(|d| (perms[d][k] as f64 + rng.gen::<f64>()) / size as f64)
                .collect();
            out.push(p);
        }
        block += 1;
    }
    out
}

fn permutation(size: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..size).collect();
    for i in (1..size).rev() {
        let j = rng.gen_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Uniform direction on `S^{n−1}` by normalizing a Gaussian vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// Stratified samples `(s, ω)` on `[T₀, T₁] × S^{n−1}`.
///
/// For `n = 2` both `s` and the polar angle come from a nested Latin
/// hypercube; otherwise `s` does and `ω` is a normalized Gaussian vector.
pub fn stratified_cylinder(n: usize, window: (f64, f64), count: usize, seed: u64) -> Vec<(f64, Vec<f64>)> {
    let len = window.1 - window.0;
    if n == 2 {
        return nested_lhs(2, count, seed)
            .into_iter()
            .map(|u| {
                let theta = std::f64::consts::TAU * u[1];
                (window.0 + len * u[0], vec![theta.cos(), theta.sin()])
            })
            .collect();
    }
    let mut rng = rng_for(seed, STREAM_MISC + 3);
    nested_lhs(1, count, seed)
        .into_iter()
        .map(|u| (window.0 + len * u[0], random_unit_vector(&mut rng, n)))
        .collect()
}

/// Keeps `base + step` inside `[lo, hi]`, flipping the step when it would
/// leave the interval and clamping as a last resort.
#[inline]
pub(crate) fn reflect_step(base: f64, step: f64, lo: f64, hi: f64) -> f64 {
    let v = base + step;
    if v >= lo && v <= hi {
        return v;
    }
    let w = base - step;
    if w >= lo && w <= hi {
        return w;
    }
    v.clamp(lo, hi)
}
