//! Randomized property suites for the metric and the sphere chord identity.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::sphere_chord_identity;
use crate::metric::{comparability_check, metric_distance, ParabolicPoint};
use crate::sampling::{random_unit_vector, rng_for, STREAM_POINT};

/// Absolute slack allowed in the triangle inequality.
pub const TRIANGLE_SLACK: f64 = 1e-12;
/// Bound on the chord identity residual.
pub const CHORD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDimReport {
    pub n: usize,
    pub triples: usize,
    /// Largest `D(a, c) − D(a, b) − D(b, c)`.
    pub max_triangle_excess: f64,
    pub symmetry_failures: usize,
    pub identity_failures: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSuiteReport {
    pub seed: u64,
    pub dims: Vec<MetricDimReport>,
    pub comparability_min: f64,
    pub comparability_max: f64,
    pub passed: bool,
}

/// Point with coordinates uniform in `[−1, 1]` times a scale drawn
/// log-uniformly from `[10⁻², 10]`, per coordinate block.
fn random_point<R: Rng>(rng: &mut R, n: usize) -> ParabolicPoint {
    let scale = 10f64.powf(rng.gen_range(-2.0..1.0));
    let t = scale * scale * rng.gen_range(-1.0..1.0);
    let x = (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
    ParabolicPoint::new(t, x).expect("finite coordinates")
}

/// Triangle inequality, exact symmetry and identity of indiscernibles on
/// `triples` random triples in each of `dims`, plus the comparability check
/// on every sampled point.
pub fn metric_suite(dims: &[usize], triples: usize, seed: u64) -> MetricSuiteReport {
    let mut reports = Vec::new();
    let mut cmin = f64::INFINITY;
    let mut cmax: f64 = 0.0;
    let mut comparability_ok = true;
    for &n in dims {
        let per: Vec<(f64, bool, bool, Vec<ParabolicPoint>)> = (0..triples)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_for(seed ^ (n as u64) << 48, STREAM_POINT + i as u64);
                let a = random_point(&mut rng, n);
                let b = random_point(&mut rng, n);
                // One in eight triples reuses a point to exercise degenerate cases.
                let c = if i % 8 == 0 { a.clone() } else { random_point(&mut rng, n) };
                let ab = metric_distance(&a, &b).expect("same dimension");
                let bc = metric_distance(&b, &c).expect("same dimension");
                let ac = metric_distance(&a, &c).expect("same dimension");
                let symmetric = ab == metric_distance(&b, &a).expect("same dimension")
                    && ac == metric_distance(&c, &a).expect("same dimension");
                let identity = metric_distance(&a, &a).expect("same dimension") == 0.0
                    && (ab > 0.0) == (a != b)
                    && (ac > 0.0) == (a != c);
                (ac - ab - bc, symmetric, identity, vec![a, b])
            })
            .collect();
        let max_triangle_excess = per.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let symmetry_failures = per.iter().filter(|p| !p.1).count();
        let identity_failures = per.iter().filter(|p| !p.2).count();
        let points: Vec<ParabolicPoint> = per.into_iter().flat_map(|p| p.3).collect();
        match comparability_check(&points) {
            Ok(c) => {
                cmin = cmin.min(c.empirical_min);
                cmax = cmax.max(c.empirical_max);
            }
            Err(_) => comparability_ok = false,
        }
        reports.push(MetricDimReport {
            n,
            triples,
            max_triangle_excess,
            symmetry_failures,
            identity_failures,
            passed: max_triangle_excess <= TRIANGLE_SLACK && symmetry_failures == 0 && identity_failures == 0,
        });
    }
    let passed = comparability_ok && reports.iter().all(|r| r.passed);
    MetricSuiteReport {
        seed,
        dims: reports,
        comparability_min: cmin,
        comparability_max: cmax,
        passed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChordSuiteReport {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub samples_per_dim: usize,
    pub max_residual: f64,
    pub passed: bool,
}

/// Chord identity residual over random unit vectors and radii in `[0.1, 10]`.
pub fn chord_suite(dims: &[usize], samples: usize, seed: u64) -> ChordSuiteReport {
    let max_residual = dims
        .iter()
        .map(|&n| {
            (0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = rng_for(seed ^ (n as u64) << 40, STREAM_POINT + i as u64);
                    let a = random_unit_vector(&mut rng, n);
                    let b = random_unit_vector(&mut rng, n);
                    let r1 = rng.gen_range(0.1..10.0);
                    let r2 = rng.gen_range(0.1..10.0);
                    sphere_chord_identity(&a, &b, r1, r2).map(f64::abs).unwrap_or(f64::INFINITY)
                })
                .reduce(|| 0.0, f64::max)
        })
        .fold(0.0, f64::max);
    ChordSuiteReport {
        seed,
        dims: dims.to_vec(),
        samples_per_dim: samples,
        max_residual,
        passed: max_residual <= CHORD_TOL,
    }
}
