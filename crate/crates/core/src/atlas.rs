//! Greedy chart covers of `∂Ω` and their fresh-sample verification.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{chart_eta, extract_chart_with, BoundaryChart, ChartManifest, ChartOptions, CHART_RESIDUAL_TOL, CHART_TOL};
use crate::domain::StarlikeDomain;
use crate::error::{Error, Result};
use crate::lip::estimate_lip12;
use crate::sampling::{random_unit_vector, rng_for, stratified_cylinder, Sampler, STREAM_MISC};

/// Seeds count as covered by a chart inside its cylinder shrunk by this.
pub const COVER_SHRINK: f64 = 0.75;
/// Fresh samples count as covered inside a cylinder shrunk by this.
pub const VERIFY_SHRINK: f64 = 0.99;
/// Fresh density relative to the build density.
pub const FRESH_FACTOR: f64 = 4.0;

/// Surface area of `S^{n−1}`.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    // |S^{n−1}| = 2π/(n−2) |S^{n−3}|, starting from |S⁰| = 2 and |S¹| = 2π.
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n - 2) as f64 * sphere_area(n - 2),
    }
}

/// Number of seeds for `density` points per unit of `(T₁ − T₀)·|S^{n−1}|`.
pub fn seed_count(d: &StarlikeDomain, density: f64) -> usize {
    let (t0, t1) = d.window();
    (density * (t1 - t0) * sphere_area(d.spatial_dim())).ceil().max(1.0) as usize
}

/// Ratio `Δs/Δθ` of seed-grid cells for planar domains: the time-to-angle
/// aspect `η²/(η/δ₀)` of the narrowest admissible chart.
pub fn default_aspect(d: &StarlikeDomain) -> f64 {
    chart_eta(d.delta0(), d.k0(), d.m_const()) * d.delta0()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtlasOptions {
    pub density: f64,
    pub seed: u64,
    /// Cell aspect `Δs/Δθ` for `n = 2`; [`default_aspect`] when absent.
    pub aspect: Option<f64>,
    pub chart: ChartOptions,
}

impl AtlasOptions {
    pub fn new(density: f64, seed: u64) -> Self {
        AtlasOptions {
            density,
            seed,
            aspect: None,
            chart: ChartOptions { seed, ..ChartOptions::default() },
        }
    }
}

/// Boundary seeds: for `n = 2` a cell-centered grid in `(s, θ)` whose angular
/// phase is drawn from `seed`; otherwise a stratified `(s, ω)` design.
pub fn boundary_seeds(d: &StarlikeDomain, count: usize, seed: u64, aspect: f64) -> Vec<(f64, Vec<f64>)> {
    let (t0, t1) = d.window();
    let len = t1 - t0;
    if d.spatial_dim() != 2 {
        return stratified_cylinder(d.spatial_dim(), d.window(), count, seed);
    }
    let tau = std::f64::consts::TAU;
    let rows = ((count as f64 * len / (tau * aspect)).sqrt().round() as usize).clamp(1, count);
    let cols = count.div_ceil(rows);
    let phase: f64 = rng_for(seed, STREAM_MISC + 61).gen();
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let s = t0 + len * (i as f64 + 0.5) / rows as f64;
        for j in 0..cols {
            let theta = tau * (j as f64 + phase) / cols as f64;
            out.push((s, vec![theta.cos(), theta.sin()]));
        }
    }
    out
}

/// A boundary sample and the chart covering it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSample {
    pub s: f64,
    pub omega: Vec<f64>,
    pub x: Vec<f64>,
    pub chart: usize,
}

#[derive(Debug, Clone)]
pub struct Atlas {
    domain: StarlikeDomain,
    charts: Vec<BoundaryChart>,
    samples: Vec<CoverageSample>,
    options: AtlasOptions,
}

/// Time intervals of the charts' cylinders, sorted by start, for lookups.
struct ChartIndex {
    starts: Vec<(f64, f64, usize)>,
    max_len: f64,
}

impl ChartIndex {
    fn new(charts: &[BoundaryChart]) -> Self {
        let mut starts: Vec<(f64, f64, usize)> = charts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let nb = c.neighborhood();
                let tau = c.frame().time_shift();
                let lo = (nb.center_t - nb.t_radius).max(nb.t_range.0) + tau;
                let hi = (nb.center_t + nb.t_radius).min(nb.t_range.1) + tau;
                (lo, hi, i)
            })
            .collect();
        starts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        let max_len = starts.iter().map(|(lo, hi, _)| hi - lo).fold(0.0, f64::max);
        ChartIndex { starts, max_len }
    }

    /// Lowest-index chart whose shrunk cylinder contains `(s, x)`.
    fn find(&self, charts: &[BoundaryChart], s: f64, x: &[f64], factor: f64) -> Option<usize> {
        let from = self.starts.partition_point(|e| e.0 < s - self.max_len);
        let to = self.starts.partition_point(|e| e.0 <= s);
        self.starts[from..to]
            .iter()
            .filter(|(_, hi, i)| *hi >= s && charts[*i].contains_world(s, x, factor))
            .map(|e| e.2)
            .min()
    }
}

/// Greedy cover with default options at `density`.
pub fn build_atlas(d: &StarlikeDomain, density: f64) -> Result<Atlas> {
    build_atlas_with(d, &AtlasOptions::new(density, 42))
}

/// Walks the seeds in order, extracts a chart at each seed not yet covered,
/// and marks every seed inside the new chart's cylinder (shrunk by
/// [`COVER_SHRINK`]) as covered.
pub fn build_atlas_with(d: &StarlikeDomain, opts: &AtlasOptions) -> Result<Atlas> {
    if !(opts.density > 0.0) || !opts.density.is_finite() {
        return Err(Error::Domain(format!("seed density must be positive, got {}", opts.density)));
    }
    let count = seed_count(d, opts.density);
    let aspect = opts.aspect.unwrap_or_else(|| default_aspect(d));
    let seeds = boundary_seeds(d, count, opts.seed, aspect);
    let points = seeds
        .par_iter()
        .map(|(s, w)| Ok(d.boundary_point(*s, w)?.x().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..seeds.len()).collect();
    order.sort_by(|&a, &b| seeds[a].0.total_cmp(&seeds[b].0).then(a.cmp(&b)));
    let sorted_s: Vec<f64> = order.iter().map(|&i| seeds[i].0).collect();

    let mut cover: Vec<Option<usize>> = vec![None; seeds.len()];
    let mut charts: Vec<BoundaryChart> = Vec::new();
    for i in 0..seeds.len() {
        if cover[i].is_some() {
            continue;
        }
        let (s0, w0) = &seeds[i];
        let chart = extract_chart_with(d, *s0, w0, &opts.chart).map_err(|e| Error::AtlasSeed {
            s: *s0,
            omega: w0.clone(),
            source: Box::new(e),
        })?;
        let id = charts.len();
        cover[i] = Some(id);
        let nb = chart.neighborhood();
        let lo = s0 + (nb.center_t - nb.t_radius).max(nb.t_range.0);
        let hi = s0 + (nb.center_t + nb.t_radius).min(nb.t_range.1);
        let from = sorted_s.partition_point(|v| *v < lo);
        let to = sorted_s.partition_point(|v| *v <= hi);
        let hits: Vec<usize> = order[from..to]
            .par_iter()
            .copied()
            .filter(|&j| cover[j].is_none() && chart.contains_world(seeds[j].0, &points[j], COVER_SHRINK))
            .collect();
        for j in hits {
            cover[j] = Some(id);
        }
        charts.push(chart);
    }
    let samples = seeds
        .into_iter()
        .zip(points)
        .zip(cover)
        .map(|(((s, omega), x), c)| CoverageSample {
            s,
            omega,
            x,
            chart: c.expect("every seed is covered after the greedy pass"),
        })
        .collect();
    Ok(Atlas {
        domain: d.clone(),
        charts,
        samples,
        options: *opts,
    })
}

impl Atlas {
    /// An atlas without charts; every boundary sample is uncovered.
    pub fn empty(d: &StarlikeDomain, opts: &AtlasOptions) -> Self {
        Atlas {
            domain: d.clone(),
            charts: Vec::new(),
            samples: Vec::new(),
            options: *opts,
        }
    }

    pub fn domain(&self) -> &StarlikeDomain {
        &self.domain
    }

    pub fn charts(&self) -> &[BoundaryChart] {
        &self.charts
    }

    pub fn samples(&self) -> &[CoverageSample] {
        &self.samples
    }

    pub fn options(&self) -> &AtlasOptions {
        &self.options
    }

    /// Fraction of build seeds covered (always 1 for a built atlas).
    pub fn seed_coverage(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let inside = self
            .samples
            .iter()
            .filter(|c| self.charts.get(c.chart).is_some_and(|ch| ch.contains_world(c.s, &c.x, 1.0)))
            .count();
        inside as f64 / self.samples.len() as f64
    }
}

/// Options for [`verify_atlas_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub fresh_seed: u64,
    /// Fresh density as a multiple of the build density.
    pub factor: f64,
    /// Per-chart sample budget for the Lip(1,1/2) check of `ψ`; 0 skips it.
    pub psi_lip_budget: usize,
    pub tol: f64,
}

impl VerifyOptions {
    pub fn new(fresh_seed: u64) -> Self {
        VerifyOptions {
            fresh_seed,
            factor: FRESH_FACTOR,
            psi_lip_budget: 32,
            tol: CHART_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub density: f64,
    pub fresh_density: f64,
    pub fresh_seed: u64,
    pub samples: usize,
    pub covered: usize,
    pub fraction: f64,
    /// Largest inclusion residual over chart verifications and fresh samples.
    pub worst_residual: f64,
    /// Largest `|f(t, x′, ψ)|` over fresh samples.
    pub max_f_residual: f64,
    /// Largest `M̂(ψ)/M′` over charts; `≤ 1` when every bound holds.
    pub max_psi_lip_ratio: f64,
    /// Up to 16 uncovered fresh samples as `(s, ω)`.
    pub uncovered: Vec<(f64, Vec<f64>)>,
    pub passed: bool,
}

/// Verification with default options.
pub fn verify_atlas(a: &Atlas, fresh_seed: u64) -> Result<CoverageReport> {
    verify_atlas_with(a, &VerifyOptions::new(fresh_seed))
}

/// Re-samples `∂Ω` uniformly in `s` and on the sphere at `factor` times the
/// build density and checks each sample against the charts' cylinders shrunk
/// by [`VERIFY_SHRINK`]. Passes iff every sample is covered and all residuals
/// are within tolerance.
pub fn verify_atlas_with(a: &Atlas, opts: &VerifyOptions) -> Result<CoverageReport> {
    let d = &a.domain;
    let fresh_density = a.options.density * opts.factor;
    let count = seed_count(d, fresh_density);
    let (t0, t1) = d.window();
    let mut rng = rng_for(opts.fresh_seed, STREAM_MISC + 67);
    let fresh: Vec<(f64, Vec<f64>)> = (0..count)
        .map(|_| (t0 + (t1 - t0) * rng.gen::<f64>(), random_unit_vector(&mut rng, d.spatial_dim())))
        .collect();
    let index = ChartIndex::new(&a.charts);
    let n = d.spatial_dim();
    let results = fresh
        .par_iter()
        .map(|(s, w)| -> Result<Option<(f64, f64)>> {
            let x = d.boundary_point(*s, w)?.x().to_vec();
            let Some(i) = index.find(&a.charts, *s, &x, VERIFY_SHRINK) else {
                return Ok(None);
            };
            let chart = &a.charts[i];
            let (t, xi) = chart.frame().to_local(*s, &x);
            let (xp, xn) = xi.split_at(n - 1);
            let psi = chart.graph().phi_uncached(t, xp)?;
            let f = chart.graph().problem().function().eval_split(t, xp, &[psi])?[0].abs();
            Ok(Some(((xn[0] - psi).abs(), f)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut covered = 0;
    let mut worst_residual = a.charts.iter().map(|c| c.verification().max_residual).fold(0.0, f64::max);
    let mut max_f_residual: f64 = 0.0;
    let mut uncovered = Vec::new();
    for (r, p) in results.iter().zip(&fresh) {
        match r {
            Some((res, f)) => {
                covered += 1;
                worst_residual = worst_residual.max(*res);
                max_f_residual = max_f_residual.max(*f);
            }
            None if uncovered.len() < 16 => uncovered.push(p.clone()),
            None => {}
        }
    }
    let max_psi_lip_ratio = if opts.psi_lip_budget >= 2 {
        a.charts
            .par_iter()
            .enumerate()
            .map(|(i, c)| -> Result<f64> {
                let f = c.graph().as_lip12fn()?;
                let sampler = Sampler::new(opts.psi_lip_budget, opts.fresh_seed.wrapping_add(i as u64));
                Ok(estimate_lip12(&f, &sampler)?.constant / c.ift_constants().m_prime)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    let fraction = if count == 0 { 0.0 } else { covered as f64 / count as f64 };
    let passed = covered == count
        && count > 0
        && worst_residual <= opts.tol
        && max_f_residual <= CHART_RESIDUAL_TOL
        && max_psi_lip_ratio <= 1.0 + 1e-9;
    Ok(CoverageReport {
        density: a.options.density,
        fresh_density,
        fresh_seed: opts.fresh_seed,
        samples: count,
        covered,
        fraction,
        worst_residual,
        max_f_residual,
        max_psi_lip_ratio,
        uncovered,
        passed,
    })
}

/// JSON atlas report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasReport {
    pub domain: String,
    pub n: usize,
    pub window: (f64, f64),
    pub seed: u64,
    pub seeds: usize,
    pub charts: Vec<ChartManifest>,
    pub coverage: CoverageReport,
}

impl AtlasReport {
    pub fn new(label: impl Into<String>, a: &Atlas, coverage: CoverageReport) -> Self {
        AtlasReport {
            domain: label.into(),
            n: a.domain.spatial_dim(),
            window: a.domain.window(),
            seed: a.options.seed,
            seeds: a.samples.len(),
            charts: a.charts.iter().map(|c| c.manifest()).collect(),
            coverage,
        }
    }
}
