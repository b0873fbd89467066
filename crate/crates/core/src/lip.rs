//! Lip(1,1/2) functions and sample-scale estimates of their constants.
//!
//! All constants produced here are certificates at sample scale: they are
//! extrema over a deterministic pair design and never claim to be global
//! bounds for a black-box evaluator.
//!
//! The pair design starts from a nested Latin hypercube over the box. Every
//! base point is paired with its predecessor, with one random earlier point,
//! and with twenty local perturbations at parabolic scales `h = 2⁻ᵏ`
//! (`|Δt| ~ h²`, `|Δx| ~ h`). The local ladder is what finds suprema near the
//! `|t − s|^½` cusp; random pairs alone miss it.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::norm_of_diff;
use crate::sampling::{nested_lhs, random_unit_vector, reflect_step, rng_for, Sampler, STREAM_POINT};
use rand::Rng;

/// Number of rungs in the local refinement ladder.
pub const REFINEMENT_LEVELS: u32 = 20;

/// A raw space-time sample `(t, x)`; `x` may be empty.
pub type RawPoint = (f64, Vec<f64>);

/// Axis-aligned box `[t_lo, t_hi] × Π [x_lo, x_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeBox {
    t: (f64, f64),
    x: Vec<(f64, f64)>,
}

impl SpaceTimeBox {
    pub fn new(t: (f64, f64), x: Vec<(f64, f64)>) -> Result<Self> {
        let finite = |(a, b): (f64, f64)| a.is_finite() && b.is_finite();
        if !finite(t) || !x.iter().copied().all(finite) {
            return Err(Error::NonFinite);
        }
        if !(t.0 < t.1) {
            return Err(Error::Domain(format!("empty time interval [{}, {}]", t.0, t.1)));
        }
        if let Some((i, r)) = x.iter().enumerate().find(|(_, r)| r.0 > r.1) {
            return Err(Error::Domain(format!("empty spatial interval {i}: [{}, {}]", r.0, r.1)));
        }
        Ok(SpaceTimeBox { t, x })
    }

    pub fn t_range(&self) -> (f64, f64) {
        self.t
    }

    pub fn x_ranges(&self) -> &[(f64, f64)] {
        &self.x
    }

    pub fn spatial_dim(&self) -> usize {
        self.x.len()
    }

    pub fn contains(&self, t: f64, x: &[f64]) -> bool {
        x.len() == self.x.len()
            && t >= self.t.0
            && t <= self.t.1
            && x.iter().zip(&self.x).all(|(v, r)| *v >= r.0 && *v <= r.1)
    }

    /// Maps a point of the unit cube `[0,1]^{1+m}` into the box.
    pub fn from_unit(&self, u: &[f64]) -> RawPoint {
        let lerp = |r: (f64, f64), s: f64| r.0 + s * (r.1 - r.0);
        let t = lerp(self.t, u[0]);
        let x = self.x.iter().zip(&u[1..]).map(|(r, s)| lerp(*r, *s)).collect();
        (t, x)
    }

    /// Splits off the last `k` spatial coordinates.
    pub(crate) fn split_tail(&self, k: usize) -> (SpaceTimeBox, Vec<(f64, f64)>) {
        let m = self.x.len() - k;
        (
            SpaceTimeBox {
                t: self.t,
                x: self.x[..m].to_vec(),
            },
            self.x[m..].to_vec(),
        )
    }
}

/// Evaluator `(t, x) ↦ f(t, x) ∈ ℝᵏ`.
pub type Evaluator = Arc<dyn Fn(f64, &[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// A function of type Lip(1,1/2) on a [`SpaceTimeBox`]:
/// `|f(t,x) − f(s,y)| ≤ M(|t − s|^½ + |x − y|)`.
#[derive(Clone)]
pub struct Lip12Fn {
    domain: SpaceTimeBox,
    eval: Evaluator,
    declared_m: Option<f64>,
    output_dim: usize,
}

impl std::fmt::Debug for Lip12Fn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Lip12Fn")
            .field("domain", &self.domain)
            .field("declared_m", &self.declared_m)
            .field("output_dim", &self.output_dim)
            .finish_non_exhaustive()
    }
}

impl Lip12Fn {
    pub fn new<F>(domain: SpaceTimeBox, output_dim: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::fallible(domain, output_dim, move |t, x| Ok(f(t, x)))
    }

    /// Scalar convenience constructor.
    pub fn scalar<F>(domain: SpaceTimeBox, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(domain, 1, move |t, x| vec![f(t, x)])
    }

    pub fn fallible<F>(domain: SpaceTimeBox, output_dim: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        assert!(output_dim > 0, "output dimension must be positive");
        Lip12Fn {
            domain,
            eval: Arc::new(f),
            declared_m: None,
            output_dim,
        }
    }

    pub fn with_declared_m(mut self, m: f64) -> Self {
        self.declared_m = Some(m);
        self
    }

    pub fn domain(&self) -> &SpaceTimeBox {
        &self.domain
    }

    pub fn declared_m(&self) -> Option<f64> {
        self.declared_m
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.domain.spatial_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.spatial_dim(),
                found: x.len(),
            });
        }
        let v = (self.eval)(t, x)?;
        if v.len() != self.output_dim {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim,
                found: v.len(),
            });
        }
        Ok(v)
    }

    pub fn eval_scalar(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.eval(t, x)?[0])
    }
}

/// A Lip(1,1/2) map `f(t, x, y)` whose last `implicit_dim` spatial inputs form
/// the implicit block `y`, with vertical non-degeneracy
/// `|f(t,x,y₁) − f(t,x,y₂)| ≥ K|y₁ − y₂|`.
#[derive(Debug, Clone)]
pub struct NondegenerateFn {
    base: Lip12Fn,
    implicit_dim: usize,
    declared_k: f64,
}

impl NondegenerateFn {
    pub fn new(base: Lip12Fn, implicit_dim: usize, declared_k: f64) -> Result<Self> {
        if !(declared_k > 0.0) {
            return Err(Error::Domain(format!("non-degeneracy constant must be positive, got {declared_k}")));
        }
        if implicit_dim == 0 || implicit_dim > base.domain.spatial_dim() {
            return Err(Error::Domain(format!(
                "implicit block of size {implicit_dim} does not fit {} spatial inputs",
                base.domain.spatial_dim()
            )));
        }
        if base.output_dim != implicit_dim {
            return Err(Error::DimensionMismatch {
                expected: implicit_dim,
                found: base.output_dim,
            });
        }
        Ok(NondegenerateFn {
            base,
            implicit_dim,
            declared_k,
        })
    }

    pub fn base(&self) -> &Lip12Fn {
        &self.base
    }

    pub fn implicit_dim(&self) -> usize {
        self.implicit_dim
    }

    /// Number of non-implicit spatial inputs.
    pub fn free_dim(&self) -> usize {
        self.base.domain.spatial_dim() - self.implicit_dim
    }

    pub fn declared_k(&self) -> f64 {
        self.declared_k
    }

    /// Evaluates `f(t, x, y)` with the blocks passed separately.
    pub fn eval_split(&self, t: f64, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let mut full = Vec::with_capacity(x.len() + y.len());
        full.extend_from_slice(x);
        full.extend_from_slice(y);
        self.base.eval(t, &full)
    }
}

/// Endpoints of the pair realising an extremal ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairWitness {
    pub t1: f64,
    pub x1: Vec<f64>,
    pub t2: f64,
    pub x2: Vec<f64>,
    pub ratio: f64,
}

/// Outcome of [`estimate_lip12`] or [`estimate_nondegeneracy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipEstimate {
    /// The empirical constant (`M̂` or `K̂`).
    pub constant: f64,
    pub pairs: usize,
    /// Pairs skipped because their denominator vanished.
    pub skipped: usize,
    pub witness: Option<PairWitness>,
    /// How far the estimate crosses the declared constant, `0` if it does not.
    pub declared_violation: f64,
}

/// Partner of base point `i` in the pair design.
enum Partner {
    Base(usize),
    Fresh(RawPoint),
}

struct PairDesign<'a> {
    domain: &'a SpaceTimeBox,
    points: Vec<RawPoint>,
    seed: u64,
}

impl<'a> PairDesign<'a> {
    fn new(domain: &'a SpaceTimeBox, sampler: &Sampler) -> Self {
        let dim = 1 + domain.spatial_dim();
        let points = nested_lhs(dim, sampler.budget, sampler.seed)
            .iter()
            .map(|u| domain.from_unit(u))
            .collect();
        PairDesign {
            domain,
            points,
            seed: sampler.seed,
        }
    }

    fn partners(&self, i: usize) -> Vec<Partner> {
        let mut rng = rng_for(self.seed, STREAM_POINT + i as u64);
        let mut out = Vec::with_capacity(REFINEMENT_LEVELS as usize + 2);
        if i >= 1 {
            out.push(Partner::Base(i - 1));
        }
        if i >= 2 {
            out.push(Partner::Base(rng.gen_range(0..i - 1)));
        }
        let (t0, x0) = &self.points[i];
        let (tlo, thi) = self.domain.t;
        let t_width = thi - tlo;
        let m = x0.len();
        for k in 1..=REFINEMENT_LEVELS {
            let h = 0.5f64.powi(k as i32);
            let u = random_unit_vector(&mut rng, 1 + m);
            let dt = u[0].signum() * (h * u[0]).powi(2) * t_width;
            let t = reflect_step(*t0, dt, tlo, thi);
            let x = x0
                .iter()
                .zip(&self.domain.x)
                .zip(&u[1..])
                .map(|((v, r), c)| reflect_step(*v, h * c * (r.1 - r.0), r.0, r.1))
                .collect();
            out.push(Partner::Fresh((t, x)));
        }
        out
    }
}

/// Extremes of a ratio over the pair design.
#[derive(Debug, Clone)]
struct Extremes {
    min: Option<(f64, usize, PairWitness)>,
    max: Option<(f64, usize, PairWitness)>,
    pairs: usize,
    skipped: usize,
}

impl Extremes {
    fn empty() -> Self {
        Extremes {
            min: None,
            max: None,
            pairs: 0,
            skipped: 0,
        }
    }

    fn offer(&mut self, ratio: f64, idx: usize, w: impl FnOnce() -> PairWitness) {
        self.pairs += 1;
        let better_min = match &self.min {
            None => true,
            Some((r, i, _)) => ratio < *r || (ratio == *r && idx < *i),
        };
        let better_max = match &self.max {
            None => true,
            Some((r, i, _)) => ratio > *r || (ratio == *r && idx < *i),
        };
        if better_min || better_max {
            let w = w();
            if better_min {
                self.min = Some((ratio, idx, w.clone()));
            }
            if better_max {
                self.max = Some((ratio, idx, w));
            }
        }
    }

    // Order-independent: ties resolve to the smallest base index.
    fn merge(mut self, other: Extremes) -> Extremes {
        self.pairs += other.pairs;
        self.skipped += other.skipped;
        if let Some((r, i, w)) = other.min {
            let take = match &self.min {
                None => true,
                Some((r0, i0, _)) => r < *r0 || (r == *r0 && i < *i0),
            };
            if take {
                self.min = Some((r, i, w));
            }
        }
        if let Some((r, i, w)) = other.max {
            let take = match &self.max {
                None => true,
                Some((r0, i0, _)) => r > *r0 || (r == *r0 && i < *i0),
            };
            if take {
                self.max = Some((r, i, w));
            }
        }
        self
    }
}

/// Scans every pair of the design; `ratio` returns `None` for pairs whose
/// denominator vanishes.
fn scan_pairs<V, E, R>(domain: &SpaceTimeBox, sampler: &Sampler, eval: E, ratio: R) -> Result<Extremes>
where
    V: Send + Sync,
    E: Fn(f64, &[f64]) -> Result<V> + Sync,
    R: Fn(&RawPoint, &V, &RawPoint, &V) -> Option<f64> + Sync,
{
    let design = PairDesign::new(domain, sampler);
    let values: Vec<V> = design
        .points
        .par_iter()
        .map(|(t, x)| eval(*t, x))
        .collect::<Result<_>>()?;
    let locals: Vec<Extremes> = (0..design.points.len())
        .into_par_iter()
        .map(|i| {
            let mut ext = Extremes::empty();
            let p = &design.points[i];
            let vp = &values[i];
            for partner in design.partners(i) {
                let fresh;
                let (q, vq) = match partner {
                    Partner::Base(j) => (&design.points[j], &values[j]),
                    Partner::Fresh(pt) => {
                        let v = eval(pt.0, &pt.1)?;
                        fresh = (pt, v);
                        (&fresh.0, &fresh.1)
                    }
                };
                match ratio(p, vp, q, vq) {
                    Some(r) => ext.offer(r, i, || PairWitness {
                        t1: p.0,
                        x1: p.1.clone(),
                        t2: q.0,
                        x2: q.1.clone(),
                        ratio: r,
                    }),
                    None => ext.skipped += 1,
                }
            }
            Ok(ext)
        })
        .collect::<Result<_>>()?;
    Ok(locals.into_iter().fold(Extremes::empty(), Extremes::merge))
}

fn euclid_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Anisotropic distance `|t − s|^½ + |x − y|`.
pub fn anisotropic_distance(p: &RawPoint, q: &RawPoint) -> f64 {
    (p.0 - q.0).abs().sqrt() + euclid_diff(&p.1, &q.1)
}

/// Empirical Lip(1,1/2) constant
/// `M̂ = max |f(p) − f(q)| / (|t − s|^½ + |x − y|)` over the pair design.
pub fn estimate_lip12(f: &Lip12Fn, sampler: &Sampler) -> Result<LipEstimate> {
    if sampler.budget < 2 {
        return Err(Error::Domain("sample budget must be at least 2".into()));
    }
    let ext = scan_pairs(
        &f.domain,
        sampler,
        |t, x| f.eval(t, x),
        |p, fp, q, fq| {
            let den = anisotropic_distance(p, q);
            (den > 0.0).then(|| euclid_diff(fp, fq) / den)
        },
    )?;
    let (constant, witness) = match ext.max {
        Some((r, _, w)) => (r, Some(w)),
        None => (0.0, None),
    };
    let declared_violation = f.declared_m.map_or(0.0, |m| (constant - m).max(0.0));
    Ok(LipEstimate {
        constant,
        pairs: ext.pairs,
        skipped: ext.skipped,
        witness,
        declared_violation,
    })
}

/// Empirical non-degeneracy constant
/// `K̂ = min |f(t,x,y₁) − f(t,x,y₂)| / |y₁ − y₂|` over pairs sharing `(t, x)`.
pub fn estimate_nondegeneracy(f: &NondegenerateFn, sampler: &Sampler) -> Result<LipEstimate> {
    if sampler.budget < 2 {
        return Err(Error::Domain("sample budget must be at least 2".into()));
    }
    let domain = &f.base.domain;
    let dim = 1 + domain.spatial_dim();
    let points: Vec<RawPoint> = nested_lhs(dim, sampler.budget, sampler.seed)
        .iter()
        .map(|u| domain.from_unit(u))
        .collect();
    let k = f.implicit_dim;
    let m = f.free_dim();
    let y_ranges = &domain.x[m..];

    let locals: Vec<Extremes> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(sampler.seed, STREAM_POINT + i as u64);
            let (t, full) = &points[i];
            let base_val = f.base.eval(*t, full)?;
            let mut ext = Extremes::empty();
            let visit = |other: Vec<f64>, ext: &mut Extremes| -> Result<()> {
                let dy = euclid_diff(&full[m..], &other[m..]);
                if dy == 0.0 {
                    ext.skipped += 1;
                    return Ok(());
                }
                let v = f.base.eval(*t, &other)?;
                let r = euclid_diff(&base_val, &v) / dy;
                ext.offer(r, i, || PairWitness {
                    t1: *t,
                    x1: full.clone(),
                    t2: *t,
                    x2: other.clone(),
                    ratio: r,
                });
                Ok(())
            };
            let mut far = full.clone();
            for (j, r) in y_ranges.iter().enumerate() {
                far[m + j] = rng.gen_range(r.0..=r.1);
            }
            visit(far, &mut ext)?;
            for level in 1..=REFINEMENT_LEVELS {
                let h = 0.5f64.powi(level as i32);
                let u = random_unit_vector(&mut rng, k);
                let mut near = full.clone();
                for (j, r) in y_ranges.iter().enumerate() {
                    near[m + j] = reflect_step(full[m + j], h * u[j] * (r.1 - r.0), r.0, r.1);
                }
                visit(near, &mut ext)?;
            }
            Ok(ext)
        })
        .collect::<Result<_>>()?;
    let ext = locals.into_iter().fold(Extremes::empty(), Extremes::merge);
    let (constant, witness) = match ext.min {
        Some((r, _, w)) => (r, Some(w)),
        None => (f64::INFINITY, None),
    };
    Ok(LipEstimate {
        constant,
        pairs: ext.pairs,
        skipped: ext.skipped,
        witness,
        declared_violation: (f.declared_k - constant).max(0.0),
    })
}

/// Sample-scale bi-Lipschitz certificate of a map between parabolic spaces:
/// `lower ≤ ‖g(α) − g(β)‖ / ‖α − β‖ ≤ upper` on every sampled pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLipCertificate {
    pub lower: f64,
    pub upper: f64,
    pub sample_count: usize,
    pub skipped: usize,
    /// Distinct inputs with equal outputs, if any were found.
    pub non_injective: Option<PairWitness>,
    /// Largest crossing of declared constants, when some were supplied.
    pub max_violation: Option<f64>,
}

impl BiLipCertificate {
    pub fn is_injective_on_samples(&self) -> bool {
        self.lower > 0.0
    }

    /// Reciprocal constants `(1/upper, 1/lower)` inherited by the inverse map.
    pub fn inverse_bounds(&self) -> (f64, f64) {
        (1.0 / self.upper, 1.0 / self.lower)
    }

    /// Records how far the certificate crosses `declared = (lower, upper)`.
    pub fn with_declared(mut self, lower: f64, upper: f64) -> Self {
        let v = (lower - self.lower).max(self.upper - upper).max(0.0);
        self.max_violation = Some(v);
        self
    }
}

/// Evaluates `map` on the pair design over `domain` and bounds the ratio
/// `‖g(α) − g(β)‖ / ‖α − β‖` in the parabolic quasi-norm.
///
/// The map receives `(t, x)` and returns `(t', x')`; spatial dimensions of
/// domain and codomain may differ.
pub fn check_bilipschitz<G>(map: G, domain: &SpaceTimeBox, sampler: &Sampler) -> Result<BiLipCertificate>
where
    G: Fn(f64, &[f64]) -> Result<RawPoint> + Sync,
{
    if sampler.budget < 2 {
        return Err(Error::Domain("sample budget must be at least 2".into()));
    }
    let ext = scan_pairs(domain, sampler, &map, |a, ga, b, gb| {
        let den = norm_of_diff(a.0, &a.1, b.0, &b.1);
        (den > 0.0).then(|| norm_of_diff(ga.0, &ga.1, gb.0, &gb.1) / den)
    })?;
    let (lower, non_injective) = match ext.min {
        Some((r, _, w)) => {
            let witness = (r == 0.0).then_some(w);
            (r, witness)
        }
        None => (f64::INFINITY, None),
    };
    let upper = ext.max.map_or(0.0, |(r, _, _)| r);
    Ok(BiLipCertificate {
        lower,
        upper,
        sample_count: ext.pairs,
        skipped: ext.skipped,
        non_injective,
        max_violation: None,
    })
}

/// Checks the reciprocal bounds of a certified map on its image: for every
/// sampled pair `α' = g(α)`, `β' = g(β)`,
/// `upper⁻¹‖α' − β'‖ ≤ ‖g⁻¹(α') − g⁻¹(β')‖ ≤ lower⁻¹‖α' − β'‖`.
///
/// Returns the largest violation (zero when both bounds hold).
pub fn verify_inverse_bounds<G, H>(
    cert: &BiLipCertificate,
    map: G,
    inverse: H,
    domain: &SpaceTimeBox,
    sampler: &Sampler,
) -> Result<f64>
where
    G: Fn(f64, &[f64]) -> Result<RawPoint> + Sync,
    H: Fn(f64, &[f64]) -> Result<RawPoint> + Sync,
{
    let (inv_lower, inv_upper) = cert.inverse_bounds();
    let image = |t: f64, x: &[f64]| -> Result<(RawPoint, RawPoint)> {
        let img = map(t, x)?;
        let back = inverse(img.0, &img.1)?;
        Ok((img, back))
    };
    let ext = scan_pairs(domain, sampler, image, |_, (ia, ba), _, (ib, bb)| {
        let d_img = norm_of_diff(ia.0, &ia.1, ib.0, &ib.1);
        let d_back = norm_of_diff(ba.0, &ba.1, bb.0, &bb.1);
        let above = d_back - inv_upper * d_img;
        let below = inv_lower * d_img - d_back;
        Some(above.max(below).max(0.0))
    })?;
    Ok(ext.max.map_or(0.0, |(v, _, _)| v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{metric_distance, ParabolicPoint, C0};

    fn unit_box(m: usize) -> SpaceTimeBox {
        SpaceTimeBox::new((0.0, 1.0), vec![(0.0, 1.0); m]).unwrap()
    }

    #[test]
    fn box_validation() {
        assert!(SpaceTimeBox::new((1.0, 1.0), vec![]).is_err());
        assert!(SpaceTimeBox::new((0.0, 1.0), vec![(2.0, 1.0)]).is_err());
        assert!(SpaceTimeBox::new((0.0, f64::NAN), vec![]).is_err());
        let b = SpaceTimeBox::new((0.0, 1.0), vec![(0.0, 0.0)]).unwrap();
        assert!(b.contains(0.5, &[0.0]));
        assert!(!b.contains(0.5, &[0.1]));
    }

    #[test]
    fn constant_function_has_zero_constant() {
        let f = Lip12Fn::scalar(unit_box(2), |_, _| 3.5);
        let est = estimate_lip12(&f, &Sampler::new(200, 1)).unwrap();
        assert_eq!(est.constant, 0.0);
    }

    #[test]
    fn spatial_identity_approaches_one() {
        let f = Lip12Fn::scalar(unit_box(1), |_, x| x[0]).with_declared_m(1.0);
        let small = estimate_lip12(&f, &Sampler::new(100, 7)).unwrap().constant;
        let large = estimate_lip12(&f, &Sampler::new(5000, 7)).unwrap();
        assert!(large.constant <= 1.0 + 1e-12);
        assert!(large.constant >= small);
        assert!(large.constant > 0.99, "{}", large.constant);
        assert_eq!(large.declared_violation, 0.0);
    }

    #[test]
    fn sqrt_time_cusp_is_found() {
        // Brute force over grid pairs: sup |√|a| − √|b|| / √|a − b| = 1 at b = 0.
        let grid: Vec<f64> = (0..=400).map(|i| -1.0 + i as f64 / 200.0).collect();
        let mut oracle = 0f64;
        for &a in &grid {
            for &b in &grid {
                if a != b {
                    oracle = oracle.max((a.abs().sqrt() - b.abs().sqrt()).abs() / (a - b).abs().sqrt());
                }
            }
        }
        assert!((oracle - 1.0).abs() < 1e-12);

        let b = SpaceTimeBox::new((-1.0, 1.0), vec![]).unwrap();
        let f = Lip12Fn::scalar(b, |t, _| t.abs().sqrt()).with_declared_m(1.0);
        let est = estimate_lip12(&f, &Sampler::new(100_000, 42)).unwrap();
        assert!(est.constant <= 1.0 + 1e-9, "{}", est.constant);
        assert!(est.constant >= 0.95, "{}", est.constant);
    }

    #[test]
    fn estimates_are_deterministic() {
        let f = Lip12Fn::scalar(unit_box(2), |t, x| (3.0 * x[0]).sin() + t.sqrt() * x[1]);
        let s = Sampler::new(1000, 11);
        let a = estimate_lip12(&f, &s).unwrap();
        let b = estimate_lip12(&f, &s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.constant.to_bits(), b.constant.to_bits());
    }

    #[test]
    fn budget_below_two_is_rejected() {
        let f = Lip12Fn::scalar(unit_box(1), |_, x| x[0]);
        assert!(estimate_lip12(&f, &Sampler::new(1, 0)).is_err());
    }

    #[test]
    fn evaluator_errors_propagate() {
        let f = Lip12Fn::fallible(unit_box(1), 1, |_, x| {
            if x[0] > 0.5 {
                Err(Error::Domain("boom".into()))
            } else {
                Ok(vec![x[0]])
            }
        });
        assert!(matches!(estimate_lip12(&f, &Sampler::new(100, 0)), Err(Error::Domain(_))));
    }

    fn nondeg(f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static, k: f64) -> NondegenerateFn {
        let b = SpaceTimeBox::new((-1.0, 1.0), vec![(-1.0, 1.0), (-4.0, 4.0)]).unwrap();
        NondegenerateFn::new(Lip12Fn::scalar(b, f), 1, k).unwrap()
    }

    #[test]
    fn nondegeneracy_examples() {
        let s = Sampler::new(2000, 3);
        let lin = estimate_nondegeneracy(&nondeg(|_, v| 2.0 * v[1], 2.0), &s).unwrap();
        assert!((lin.constant - 2.0).abs() < 1e-12, "{}", lin.constant);

        let mixed = nondeg(|t, v| 2.0 * v[1] - v[0].sin() - t.abs().sqrt(), 2.0);
        let est = estimate_nondegeneracy(&mixed, &s).unwrap();
        assert!((est.constant - 2.0).abs() < 1e-9, "{}", est.constant);
        assert!(est.declared_violation < 1e-9);
    }

    #[test]
    fn nondegeneracy_of_wobbly_map() {
        // Grid oracle: min over grid pairs of |Δ(y + ½ sin y)| / |Δy| stays above ½.
        let g = |y: f64| y + 0.5 * y.sin();
        let grid: Vec<f64> = (0..=800).map(|i| -4.0 + i as f64 / 100.0).collect();
        let mut oracle = f64::INFINITY;
        for w in grid.windows(2) {
            oracle = oracle.min((g(w[1]) - g(w[0])).abs() / (w[1] - w[0]));
        }
        assert!(oracle >= 0.5 && oracle < 0.5001, "{oracle}");

        let f = nondeg(move |_, v| g(v[1]), 0.5);
        let est = estimate_nondegeneracy(&f, &Sampler::new(4000, 5)).unwrap();
        assert!(est.constant >= 0.5 - 1e-9, "{}", est.constant);
        assert!(est.constant < 0.51, "{}", est.constant);
    }

    #[test]
    fn nondeg_fn_validation() {
        let b = SpaceTimeBox::new((0.0, 1.0), vec![(0.0, 1.0)]).unwrap();
        let f = Lip12Fn::scalar(b.clone(), |_, v| v[0]);
        assert!(NondegenerateFn::new(f.clone(), 1, 0.0).is_err());
        assert!(NondegenerateFn::new(f.clone(), 2, 1.0).is_err());
        let two = Lip12Fn::new(b, 2, |_, v| vec![v[0], v[0]]);
        assert!(NondegenerateFn::new(two, 1, 1.0).is_err());
    }

    fn pp(t: f64, x: &[f64]) -> RawPoint {
        (t, x.to_vec())
    }

    #[test]
    fn bilipschitz_identity() {
        let b = SpaceTimeBox::new((-1.0, 1.0), vec![(-1.0, 1.0); 2]).unwrap();
        let cert = check_bilipschitz(|t, x| Ok(pp(t, x)), &b, &Sampler::new(500, 1)).unwrap();
        assert!((cert.lower - 1.0).abs() < 1e-12 && (cert.upper - 1.0).abs() < 1e-12);
        assert!(cert.is_injective_on_samples());
        assert!(cert.non_injective.is_none());
    }

    #[test]
    fn bilipschitz_dilation_on_time_slice() {
        // Pairs restricted to t = 0: T_2 doubles every distance.
        let b = SpaceTimeBox::new((0.0, 1e-300), vec![(-1.0, 1.0); 2]).unwrap();
        let d = crate::metric::Dilation::new(2.0).unwrap();
        let cert = check_bilipschitz(
            |_, x| {
                let p = d.apply(&ParabolicPoint::new(0.0, x.to_vec())?);
                Ok(pp(p.t(), p.x()))
            },
            &b,
            &Sampler::new(500, 2),
        )
        .unwrap();
        assert!((cert.lower - 2.0).abs() < 1e-12, "{}", cert.lower);
        assert!((cert.upper - 2.0).abs() < 1e-12, "{}", cert.upper);
    }

    #[test]
    fn non_injective_map_is_reported() {
        let b = SpaceTimeBox::new((-1.0, 1.0), vec![(-1.0, 1.0)]).unwrap();
        // Forgets time and rounds space, so nearby inputs share an image.
        let cert = check_bilipschitz(|_, x| Ok(pp(0.0, &[(4.0 * x[0]).round()])), &b, &Sampler::new(2000, 3)).unwrap();
        assert_eq!(cert.lower, 0.0);
        assert!(cert.non_injective.is_some());
        assert!(!cert.is_injective_on_samples());
    }

    #[test]
    fn inverse_bounds_follow_certificate() {
        // An affine shear in (t, x) and its explicit inverse.
        let b = SpaceTimeBox::new((-1.0, 1.0), vec![(-1.0, 1.0); 2]).unwrap();
        let g = |t: f64, x: &[f64]| Ok(pp(t, &[2.0 * x[0] + 0.5 * x[1], x[1] - 0.3 * x[0]]));
        let g_inv = |t: f64, y: &[f64]| {
            let det = 2.0 + 0.15;
            Ok(pp(t, &[(y[0] - 0.5 * y[1]) / det, (0.3 * y[0] + 2.0 * y[1]) / det]))
        };
        let s = Sampler::new(2000, 9);
        let cert = check_bilipschitz(g, &b, &s).unwrap();
        assert!(cert.lower > 0.0 && cert.upper >= cert.lower);
        let viol = verify_inverse_bounds(&cert, g, g_inv, &b, &s).unwrap();
        assert!(viol <= 1e-9, "{viol}");
    }

    #[test]
    fn declared_violation_is_recorded() {
        let b = SpaceTimeBox::new((-1.0, 1.0), vec![(-1.0, 1.0)]).unwrap();
        let cert = check_bilipschitz(|t, x| Ok(pp(t, x)), &b, &Sampler::new(100, 1)).unwrap();
        assert_eq!(cert.clone().with_declared(0.5, 2.0).max_violation, Some(0.0));
        let v = cert.with_declared(1.5, 2.0).max_violation.unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn estimates_monotone_in_budget(seed in 0u64..1000, small in 2usize..200, extra in 1usize..400) {
                let b = SpaceTimeBox::new((-1.0, 1.0), vec![(-1.0, 1.0), (-2.0, 2.0)]).unwrap();
                let f = Lip12Fn::scalar(b.clone(), |t, x| x[0] * x[1] + 0.3 * t.abs().sqrt());
                let s1 = Sampler::new(small, seed);
                let s2 = Sampler::new(small + extra, seed);
                prop_assert!(estimate_lip12(&f, &s2).unwrap().constant >= estimate_lip12(&f, &s1).unwrap().constant);

                let nd = NondegenerateFn::new(
                    Lip12Fn::scalar(b, |t, x| 3.0 * x[1] + x[1].sin() - x[0] * t),
                    1,
                    2.0,
                ).unwrap();
                prop_assert!(
                    estimate_nondegeneracy(&nd, &s2).unwrap().constant
                        <= estimate_nondegeneracy(&nd, &s1).unwrap().constant
                );
            }

            #[test]
            fn parabolic_lipschitz_equivalence(
                t1 in -1.0f64..1.0, t2 in -1.0f64..1.0,
                x1 in prop::collection::vec(-1.0f64..1.0, 2),
                x2 in prop::collection::vec(-1.0f64..1.0, 2),
            ) {
                // f(t,x) = sin(x₀) − cos(x₁) + |t|^½ has M = 2.
                let f = |t: f64, x: &[f64]| x[0].sin() - x[1].cos() + t.abs().sqrt();
                let m = 2.0;
                let p = ParabolicPoint::new(t1, x1.clone()).unwrap();
                let q = ParabolicPoint::new(t2, x2.clone()).unwrap();
                let lhs = (f(t1, &x1) - f(t2, &x2)).abs();
                prop_assert!(lhs <= m / C0 * metric_distance(&p, &q).unwrap() + 1e-12);
            }
        }
    }
}
