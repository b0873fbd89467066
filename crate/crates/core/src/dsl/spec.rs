use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ast::RadialExpr;
use super::eval::evaluate;
use super::parser::parse;
use crate::domain::StarlikeDomain;
use crate::error::{Error, Result};
use crate::metric::norm2;
use crate::sampling::{random_unit_vector, reflect_step, rng_for, stratified_cylinder, Sampler, STREAM_POINT};

/// Minimum number of `(s, ω)` samples used by [`validate_spec`].
pub const MIN_VALIDATION_SAMPLES: usize = 10_000;
/// Most range witnesses kept in a report.
const MAX_WITNESSES: usize = 16;

/// Domain config file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub window: [f64; 2],
    pub delta0: f64,
    pub k0: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub phi: String,
}

/// A parsed and structurally checked domain config.
#[derive(Debug, Clone)]
pub struct RadialSpec {
    config: DomainConfig,
    expr: Arc<RadialExpr>,
}

impl RadialSpec {
    /// Checks `n ≥ 2`, `T₀ < T₁`, `0 < δ₀ < K₀`, `M ≥ 0` and that `φ` only
    /// uses `w1..wn`.
    pub fn new(config: DomainConfig) -> Result<Self> {
        let c = &config;
        if c.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", c.n)));
        }
        if !(c.window[0] < c.window[1]) || !c.window.iter().all(|v| v.is_finite()) {
            return Err(Error::Config(format!(
                "window [{}, {}] must be a finite interval with T0 < T1",
                c.window[0], c.window[1]
            )));
        }
        if !(c.delta0 > 0.0) || !c.k0.is_finite() {
            return Err(Error::Config(format!("delta0 must be positive and k0 finite, got {} and {}", c.delta0, c.k0)));
        }
        if !(c.delta0 < c.k0) {
            return Err(Error::Config(format!(
                "delta0 < k0 violated: delta0 = {}, k0 = {}",
                c.delta0, c.k0
            )));
        }
        if !(c.m >= 0.0) || !c.m.is_finite() {
            return Err(Error::Config(format!("M must be finite and non-negative, got {}", c.m)));
        }
        let expr = parse(&c.phi)?;
        if expr.max_omega_index() > c.n {
            return Err(Error::Config(format!(
                "phi uses w{} but n = {}",
                expr.max_omega_index(),
                c.n
            )));
        }
        Ok(RadialSpec {
            config,
            expr: Arc::new(expr),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: DomainConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::new(config)
    }

    pub fn config(&self) -> &DomainConfig {
        &self.config
    }

    pub fn expr(&self) -> &RadialExpr {
        &self.expr
    }

    pub fn window(&self) -> (f64, f64) {
        (self.config.window[0], self.config.window[1])
    }

    pub fn eval(&self, s: f64, omega: &[f64]) -> Result<f64> {
        Ok(evaluate(&self.expr, s, omega)?)
    }

    pub fn to_domain(&self) -> Result<StarlikeDomain> {
        let c = &self.config;
        let expr = self.expr.clone();
        StarlikeDomain::new(c.n, self.window(), c.delta0, c.k0, c.m, move |s, w| Ok(evaluate(&expr, s, w)?))
    }
}

/// A sample where `φ` left `(δ₀, K₀)` or failed to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeWitness {
    pub s: f64,
    pub omega: Vec<f64>,
    /// `None` when evaluation failed.
    pub value: Option<f64>,
    pub message: String,
}

/// Largest chordal Lip(1,1/2) ratio found and where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipWitness {
    pub s1: f64,
    pub omega1: Vec<f64>,
    pub s2: f64,
    pub omega2: Vec<f64>,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub seed: u64,
    pub min_value: f64,
    pub max_value: f64,
    pub range_violations: usize,
    pub range_witnesses: Vec<RangeWitness>,
    pub declared_m: f64,
    /// `max |Δφ| / (|Δs|^½ + |Δω|)` over the sampled pairs.
    pub lip_estimate: f64,
    pub lip_witness: Option<LipWitness>,
    pub range_ok: bool,
    pub lip_ok: bool,
    pub passed: bool,
}

struct PointResult {
    value: Result<f64, String>,
    best: Option<LipWitness>,
}

/// Samples `φ` on a stratified `(s, ω)` design of at least
/// [`MIN_VALIDATION_SAMPLES`] points, checks `δ₀ < φ < K₀` strictly and
/// estimates the Lip(1,1/2) constant with the chordal metric on `ω`.
///
/// Each sample is paired with its predecessor, one random earlier sample, and
/// 20 perturbations `(s ± h²L, normalize(ω + h v))`, `h = 2⁻ᵏ`.
pub fn validate_spec(spec: &RadialSpec, sampler: &Sampler) -> ValidationReport {
    let c = spec.config();
    let (t0, t1) = spec.window();
    let count = sampler.budget.max(MIN_VALIDATION_SAMPLES);
    let pts = stratified_cylinder(c.n, (t0, t1), count, sampler.seed);
    let values: Vec<Result<f64, String>> = pts.par_iter().map(|(s, w)| spec.eval(*s, w).map_err(|e| e.to_string())).collect();
    let len = t1 - t0;

    let results: Vec<PointResult> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(sampler.seed, STREAM_POINT + i as u64);
            let (s, w) = &pts[i];
            let mut best: Option<LipWitness> = None;
            let Ok(fv) = values[i] else {
                return PointResult {
                    value: values[i].clone(),
                    best,
                };
            };
            let mut offer = |s2: f64, w2: &[f64], f2: f64| {
                let dw: f64 = w.iter().zip(w2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let denom = (s - s2).abs().sqrt() + dw;
                if denom > 0.0 {
                    let ratio = (fv - f2).abs() / denom;
                    if best.as_ref().map_or(true, |b| ratio > b.ratio) {
                        best = Some(LipWitness {
                            s1: *s,
                            omega1: w.clone(),
                            s2,
                            omega2: w2.to_vec(),
                            ratio,
                        });
                    }
                }
            };
            if i > 0 {
                let j = rng.gen_range(0..i);
                for k in [i - 1, j] {
                    if let Ok(fk) = values[k] {
                        offer(pts[k].0, &pts[k].1, fk);
                    }
                }
            }
            let v = random_unit_vector(&mut rng, c.n);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            for k in 1..=20 {
                let h = 0.5f64.powi(k);
                let s2 = reflect_step(*s, sign * h * h * len, t0, t1);
                let mut w2: Vec<f64> = w.iter().zip(&v).map(|(a, b)| a + h * b).collect();
                let norm = norm2(&w2).sqrt();
                w2.iter_mut().for_each(|x| *x /= norm);
                if let Ok(f2) = spec.eval(s2, &w2) {
                    offer(s2, &w2, f2);
                }
            }
            PointResult {
                value: Ok(fv),
                best,
            }
        })
        .collect();

    let mut min_value = f64::INFINITY;
    let mut max_value = f64::NEG_INFINITY;
    let mut range_violations = 0;
    let mut range_witnesses = Vec::new();
    let mut lip_witness: Option<LipWitness> = None;
    for (r, (s, w)) in results.into_iter().zip(&pts) {
        let witness = match r.value {
            Ok(v) => {
                min_value = min_value.min(v);
                max_value = max_value.max(v);
                if v > c.delta0 && v < c.k0 {
                    None
                } else {
                    Some(RangeWitness {
                        s: *s,
                        omega: w.clone(),
                        value: Some(v),
                        message: format!("phi = {v} outside ({}, {})", c.delta0, c.k0),
                    })
                }
            }
            Err(message) => Some(RangeWitness {
                s: *s,
                omega: w.clone(),
                value: None,
                message,
            }),
        };
        if let Some(wt) = witness {
            range_violations += 1;
            if range_witnesses.len() < MAX_WITNESSES {
                range_witnesses.push(wt);
            }
        }
        if let Some(b) = r.best {
            if lip_witness.as_ref().map_or(true, |cur| b.ratio > cur.ratio) {
                lip_witness = Some(b);
            }
        }
    }
    let lip_estimate = lip_witness.as_ref().map_or(0.0, |w| w.ratio);
    let range_ok = range_violations == 0;
    let lip_ok = lip_estimate <= c.m + 1e-9;
    ValidationReport {
        samples: count,
        seed: sampler.seed,
        min_value,
        max_value,
        range_violations,
        range_witnesses,
        declared_m: c.m,
        lip_estimate,
        lip_witness,
        range_ok,
        lip_ok,
        passed: range_ok && lip_ok,
    }
}
