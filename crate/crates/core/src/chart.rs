//! Local boundary charts of star-like domains.
//!
//! In the frame `(t, ξ) = (s − τ, R x)` with `R ω₀ = eₙ`, the boundary near
//! `(τ, λω₀)`, `λ = φ(τ, ω₀)`, is the zero set of
//!
//! ```text
//! f(t, x′, xₙ) = φ²(t + τ, Rᵀξ/|ξ|) − |ξ|²,   ξ = (x′, xₙ),
//! ```
//!
//! which is non-degenerate in `xₙ` on the cylinder `C = V × I`. The implicit
//! solver turns it into a graph `xₙ = ψ(t, x′)`.
//!
//! Constants on `|x′| ≤ η`, `xₙ ∈ [λ − η, λ + η]`, `η ≤ λ/2`, with
//! `‖φ‖∞ ≤ K₀`:
//! - `|Δ_t f| ≤ 2K₀M |Δt|^½`.
//! - `|Δ_ξ f| ≤ (4K₀M/λ + 2 max|ξ|) |Δξ|`, from the chord bound
//!   `|σ₁ − σ₂| ≤ |ξ₁ − ξ₂|/√(|ξ₁||ξ₂|) ≤ (2/λ)|ξ₁ − ξ₂|`.
//! - `|∂ₙσ| = |x′|/|ξ|² ≤ 4η/λ²`, so `|Δ_{xₙ} f| ≥ (λ − 2K₀M·4η/λ²)|Δxₙ|`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::StarlikeDomain;
use crate::error::{ChartFailure, Error, Result};
use crate::frame::{frame_to_pole, FrameManifest, SpatialFrame};
use crate::implicit::{solve_graph_in, IftConstants, IftProblem, ImplicitGraph, Neighborhood, NeighborhoodShape};
use crate::lip::{Lip12Fn, NondegenerateFn, SpaceTimeBox};
use crate::metric::norm2;
use crate::sampling::{nested_lhs, rng_for, STREAM_MISC};

/// Inclusion tolerance for chart verification.
pub const CHART_TOL: f64 = 1e-8;
/// Bound on `|f(t, x′, ψ)|` at probes in `V`.
pub const CHART_RESIDUAL_TOL: f64 = 1e-10;
/// Samples per inclusion direction.
pub const CHART_SAMPLES: usize = 1000;

/// `η = min(λ/2, λ³/(16K₀M))`; the second term is absent when `M = 0`.
pub fn chart_eta(lambda: f64, k0: f64, m: f64) -> f64 {
    let half = lambda / 2.0;
    if k0 * m > 0.0 {
        half.min(lambda.powi(3) / (16.0 * k0 * m))
    } else {
        half
    }
}

/// Analytic constants of the chart function on the chart box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartConstants {
    pub lambda: f64,
    pub eta: f64,
    /// `λ/2`.
    pub eta_cap_radius: f64,
    /// `λ³/(16K₀M)`, infinite when `K₀M = 0`.
    pub eta_cap_nondegeneracy: f64,
    /// `‖φ‖∞`, taken as `K₀`.
    pub phi_sup: f64,
    pub phi_m: f64,
    /// `2/λ`: chordal Lipschitz bound of `ξ ↦ ξ/|ξ|` on the chart box.
    pub chord_bound: f64,
    /// `4η/λ²`: bound on `|∂ₙ(ξ/|ξ|)|` on the chart box.
    pub projection_bound: f64,
    /// `2K₀M`.
    pub lip_time: f64,
    /// `4K₀M/λ + 2√(η² + (λ + η)²)`.
    pub lip_space: f64,
    /// Lip(1,1/2) constant `max(lip_time, lip_space)` of `f`.
    pub lip_m: f64,
    /// `λ − 2K₀M·4η/λ²`.
    pub nondegeneracy_k: f64,
}

impl ChartConstants {
    pub fn new(d: &StarlikeDomain, lambda: f64, eta: f64) -> Result<Self> {
        if !(lambda > 0.0) || !(eta > 0.0) || eta > lambda / 2.0 {
            return Err(Error::Domain(format!("need 0 < η ≤ λ/2, got λ={lambda}, η={eta}")));
        }
        let (k0, m) = (d.k0(), d.m_const());
        let projection_bound = 4.0 * eta / (lambda * lambda);
        let lip_time = 2.0 * k0 * m;
        let lip_space = 4.0 * k0 * m / lambda + 2.0 * (eta * eta + (lambda + eta).powi(2)).sqrt();
        let nondegeneracy_k = lambda - 2.0 * k0 * m * projection_bound;
        if !(nondegeneracy_k > 0.0) {
            return Err(Error::Nondegeneracy(format!(
                "λ − 2K₀M·4η/λ² = {nondegeneracy_k} is not positive"
            )));
        }
        Ok(ChartConstants {
            lambda,
            eta,
            eta_cap_radius: lambda / 2.0,
            eta_cap_nondegeneracy: if k0 * m > 0.0 { lambda.powi(3) / (16.0 * k0 * m) } else { f64::INFINITY },
            phi_sup: k0,
            phi_m: m,
            chord_bound: 2.0 / lambda,
            projection_bound,
            lip_time,
            lip_space,
            lip_m: lip_time.max(lip_space),
            nondegeneracy_k,
        })
    }
}

/// The chart function with its box, frame and constants.
#[derive(Debug, Clone)]
pub struct ChartFunction {
    pub function: NondegenerateFn,
    pub frame: SpatialFrame,
    pub constants: ChartConstants,
    /// Local time range `[T₀ − τ, T₁ − τ] ∩ [−η², η²]`.
    pub t_range: (f64, f64),
}

/// Chart function for the frame's pole direction with `η` from [`chart_eta`].
pub fn chart_function(d: &StarlikeDomain, frame: &SpatialFrame) -> Result<ChartFunction> {
    let n = d.spatial_dim();
    let mut pole = vec![0.0; n];
    pole[n - 1] = 1.0;
    let omega0 = frame.unrotate(&pole);
    let lambda = d.radius_unchecked(frame.time_shift(), &omega0)?;
    chart_function_with_eta(d, frame, chart_eta(lambda, d.k0(), d.m_const()))
}

pub fn chart_function_with_eta(d: &StarlikeDomain, frame: &SpatialFrame, eta: f64) -> Result<ChartFunction> {
    let n = d.spatial_dim();
    if frame.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: frame.dim() });
    }
    let tau = frame.time_shift();
    d.check_time(tau)?;
    let mut pole = vec![0.0; n];
    pole[n - 1] = 1.0;
    let lambda = d.radius_unchecked(tau, &frame.unrotate(&pole))?;
    let constants = ChartConstants::new(d, lambda, eta)?;
    let (w0, w1) = d.window();
    let t_range = ((w0 - tau).max(-eta * eta), (w1 - tau).min(eta * eta));
    let half = eta / ((n - 1) as f64).sqrt();
    let mut x = vec![(-half, half); n - 1];
    x.push((lambda - eta, lambda + eta));
    let domain = SpaceTimeBox::new(t_range, x)?;

    let radial = d.radial_fn().clone();
    let fr = frame.clone();
    let window = d.window();
    let f = Lip12Fn::fallible(domain, 1, move |t, xi| {
        let world = fr.unrotate(xi);
        let r = norm2(&world).sqrt();
        let sigma: Vec<f64> = world.iter().map(|v| v / r).collect();
        let s = (t + tau).clamp(window.0, window.1);
        let phi = radial(s, &sigma)?;
        Ok(vec![phi * phi - r * r])
    })
    .with_declared_m(constants.lip_m);
    Ok(ChartFunction {
        function: NondegenerateFn::new(f, 1, constants.nondegeneracy_k)?,
        frame: frame.clone(),
        constants,
        t_range,
    })
}

/// Options for [`extract_chart_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartOptions {
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions {
            tol: CHART_TOL,
            samples: CHART_SAMPLES,
            seed: 42,
        }
    }
}

/// Sample-scale evidence for `C ∩ ∂Ω = C ∩ Σ(ψ, V)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartVerification {
    /// Samples per inclusion direction.
    pub samples: usize,
    pub tolerance: f64,
    /// Largest `|r − φ(s, σ)|` over graph points.
    pub max_graph_residual: f64,
    /// Largest `|xₙ − ψ(t, x′)|` over boundary points inside `C`.
    pub max_boundary_residual: f64,
    /// Largest `|f(t, x′, ψ(t, x′))|` over graph probes.
    pub max_f_residual: f64,
    /// `max(max_graph_residual, max_boundary_residual)`.
    pub max_residual: f64,
}

/// A verified boundary chart.
#[derive(Debug, Clone)]
pub struct BoundaryChart {
    frame: SpatialFrame,
    s0: f64,
    omega0: Vec<f64>,
    constants: ChartConstants,
    psi: ImplicitGraph,
    verification: ChartVerification,
}

/// Serialized chart summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartManifest {
    pub s0: f64,
    pub omega0: Vec<f64>,
    pub frame: FrameManifest,
    pub lambda: f64,
    pub eta: f64,
    pub neighborhood: Neighborhood,
    pub interval: (f64, f64),
    pub constants: ChartManifestConstants,
    pub verification: ChartVerification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartManifestConstants {
    pub chart: ChartConstants,
    pub ift: IftConstants,
}

/// Extracts and verifies the chart at `(s0, ω₀)` with default options.
pub fn extract_chart(d: &StarlikeDomain, s0: f64, omega0: &[f64]) -> Result<BoundaryChart> {
    extract_chart_with(d, s0, omega0, &ChartOptions::default())
}

/// Charts at the ends of the time window use the one-sided cylinder
/// `t ∈ [T₀ − s0, T₁ − s0] ∩ (−η², η²)`.
pub fn extract_chart_with(d: &StarlikeDomain, s0: f64, omega0: &[f64], opts: &ChartOptions) -> Result<BoundaryChart> {
    d.check_time(s0)?;
    let lambda = d.radius(s0, omega0)?;
    let frame = frame_to_pole(omega0)?.with_time_shift(s0);
    let eta = chart_eta(lambda, d.k0(), d.m_const());
    let cf = chart_function_with_eta(d, &frame, eta)?;
    let n = d.spatial_dim();
    let problem = IftProblem::new(cf.function.clone(), (0.0, vec![0.0; n - 1]), lambda)?;
    let start = Neighborhood {
        center_t: 0.0,
        center_x: vec![0.0; n - 1],
        t_radius: eta * eta,
        x_radius: eta / ((n - 1) as f64).sqrt(),
        t_range: cf.t_range,
        shape: NeighborhoodShape::Parabolic,
    };
    let psi = solve_graph_in(problem, start)?;
    let mut chart = BoundaryChart {
        frame,
        s0,
        omega0: omega0.to_vec(),
        constants: cf.constants,
        psi,
        verification: ChartVerification {
            samples: opts.samples,
            tolerance: opts.tol,
            max_graph_residual: 0.0,
            max_boundary_residual: 0.0,
            max_f_residual: 0.0,
            max_residual: 0.0,
        },
    };
    chart.verify(d, opts)?;
    Ok(chart)
}

struct Worst {
    residual: f64,
    s: f64,
    x: Vec<f64>,
}

fn worst_of(items: Vec<Worst>) -> Option<Worst> {
    // First maximal item in sample order, so the witness is deterministic.
    items.into_iter().reduce(|a, b| if b.residual > a.residual { b } else { a })
}

impl BoundaryChart {
    pub fn frame(&self) -> &SpatialFrame {
        &self.frame
    }

    pub fn base_point(&self) -> (f64, &[f64]) {
        (self.s0, &self.omega0)
    }

    pub fn lambda(&self) -> f64 {
        self.constants.lambda
    }

    pub fn eta(&self) -> f64 {
        self.constants.eta
    }

    pub fn constants(&self) -> &ChartConstants {
        &self.constants
    }

    pub fn ift_constants(&self) -> &IftConstants {
        self.psi.constants()
    }

    pub fn neighborhood(&self) -> &Neighborhood {
        self.psi.neighborhood()
    }

    /// `I = [λ − η, λ + η]`.
    pub fn interval(&self) -> (f64, f64) {
        self.psi.y_interval()
    }

    pub fn graph(&self) -> &ImplicitGraph {
        &self.psi
    }

    pub fn verification(&self) -> &ChartVerification {
        &self.verification
    }

    /// `ψ(t, x′)` in local coordinates.
    pub fn psi(&self, t: f64, x_prime: &[f64]) -> Result<f64> {
        self.psi.phi(t, x_prime)
    }

    /// `|f(t, x′, ψ(t, x′))|`.
    pub fn residual(&self, t: f64, x_prime: &[f64]) -> Result<f64> {
        self.psi.residual(t, x_prime)
    }

    /// Whether the world point `(s, x)` lies in the open cylinder `C` with
    /// `V` and `I` shrunk by `factor` about their centers. The time range cut
    /// by the window is not shrunk.
    pub fn contains_world(&self, s: f64, x: &[f64], factor: f64) -> bool {
        let (t, xi) = self.frame.to_local(s, x);
        let (xp, xn) = xi.split_at(xi.len() - 1);
        (xn[0] - self.constants.lambda).abs() < factor * self.constants.eta
            && self.neighborhood().contains_scaled(t, xp, factor)
    }

    pub fn manifest(&self) -> ChartManifest {
        ChartManifest {
            s0: self.s0,
            omega0: self.omega0.clone(),
            frame: self.frame.manifest(),
            lambda: self.constants.lambda,
            eta: self.constants.eta,
            neighborhood: self.neighborhood().clone(),
            interval: self.interval(),
            constants: ChartManifestConstants {
                chart: self.constants,
                ift: *self.ift_constants(),
            },
            verification: self.verification.clone(),
        }
    }

    /// Graph points `(s, x)` for the boundary export, taken from the
    /// stratified probe design in `V`.
    pub fn graph_points(&self, count: usize, seed: u64) -> Result<Vec<(f64, Vec<f64>)>> {
        let mut rng = rng_for(seed, STREAM_MISC + 53);
        (0..count)
            .map(|_| {
                let (t, xp) = self.neighborhood().sample_interior(&mut rng);
                let y = self.psi(t, &xp)?;
                let mut xi = xp;
                xi.push(y);
                Ok(self.frame.to_world(t, &xi))
            })
            .collect()
    }

    fn verify(&mut self, d: &StarlikeDomain, opts: &ChartOptions) -> Result<()> {
        let samples = opts.samples.max(1);
        let (graph_worst, f_worst) = self.graph_to_boundary(d, samples, opts.seed)?;
        let boundary_worst = self.boundary_to_graph(d, samples, opts.seed)?;
        let v = &mut self.verification;
        v.max_graph_residual = graph_worst.residual;
        v.max_boundary_residual = boundary_worst.residual;
        v.max_f_residual = f_worst;
        v.max_residual = v.max_graph_residual.max(v.max_boundary_residual);
        for (direction, w) in [("graph_to_boundary", graph_worst), ("boundary_to_graph", boundary_worst)] {
            if !(w.residual <= opts.tol) {
                return Err(Error::ChartInvalid(Box::new(ChartFailure {
                    direction,
                    s: w.s,
                    x: w.x,
                    residual: w.residual,
                    tolerance: opts.tol,
                })));
            }
        }
        if !(f_worst <= CHART_RESIDUAL_TOL) {
            return Err(Error::Consistency(format!(
                "chart residual |f(t, x′, ψ)| = {f_worst:e} exceeds {CHART_RESIDUAL_TOL:e}"
            )));
        }
        Ok(())
    }

    /// Graph points must lie on `∂Ω` and inside `C`.
    fn graph_to_boundary(&self, d: &StarlikeDomain, samples: usize, seed: u64) -> Result<(Worst, f64)> {
        let mut rng = rng_for(seed, STREAM_MISC + 59);
        let probes: Vec<(f64, Vec<f64>)> = (0..samples).map(|_| self.neighborhood().sample_interior(&mut rng)).collect();
        let (ylo, yhi) = self.interval();
        let results = probes
            .par_iter()
            .map(|(t, xp)| -> Result<(Worst, f64)> {
                let y = self.psi(*t, xp)?;
                let f_res = self.psi.problem().function().eval_split(*t, xp, &[y])?[0].abs();
                let mut xi = xp.clone();
                xi.push(y);
                let (s, x) = self.frame.to_world(*t, &xi);
                let r = norm2(&x).sqrt();
                let sigma: Vec<f64> = x.iter().map(|v| v / r).collect();
                let phi = d.radius_unchecked(s, &sigma)?;
                let outside_i = if y > ylo && y < yhi { 0.0 } else { f64::INFINITY };
                Ok((
                    Worst {
                        residual: (r - phi).abs().max(outside_i),
                        s,
                        x,
                    },
                    f_res,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let f_worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
        let worst = worst_of(results.into_iter().map(|r| r.0).collect()).expect("samples > 0");
        Ok((worst, f_worst))
    }

    /// Boundary points inside `C` must lie on the graph. Candidates come from
    /// a stratified design over local time and the cone of directions that
    /// can meet `C`; those outside `C` are rejected.
    fn boundary_to_graph(&self, d: &StarlikeDomain, samples: usize, seed: u64) -> Result<Worst> {
        let n = d.spatial_dim();
        let nb = self.neighborhood().clone();
        let (lambda, eta) = (self.constants.lambda, self.constants.eta);
        let tlo = (nb.center_t - nb.t_radius).max(nb.t_range.0);
        let thi = (nb.center_t + nb.t_radius).min(nb.t_range.1);
        let slope = nb.x_radius / (lambda - eta);
        let mut budget = 4 * samples;
        loop {
            let design = nested_lhs(n, budget, seed ^ 0x5eed);
            let candidates = design
                .par_iter()
                .map(|u| -> Result<Option<(f64, Vec<f64>)>> {
                    let t = tlo + (thi - tlo) * u[0];
                    let mut zeta: Vec<f64> = u[1..].iter().map(|c| slope * (2.0 * c - 1.0)).collect();
                    zeta.push(1.0);
                    let norm = norm2(&zeta).sqrt();
                    zeta.iter_mut().for_each(|c| *c /= norm);
                    let (s, omega) = self.frame.to_world(t, &zeta);
                    let r = d.radius_unchecked(s, &omega)?;
                    let xi: Vec<f64> = zeta.iter().map(|c| r * c).collect();
                    let (xp, xn) = xi.split_at(n - 1);
                    if (xn[0] - lambda).abs() < eta && nb.contains(t, xp) {
                        Ok(Some((t, xi)))
                    } else {
                        Ok(None)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let accepted: Vec<(f64, Vec<f64>)> = candidates.into_iter().flatten().take(samples).collect();
            if accepted.len() == samples || budget >= 256 * samples {
                if accepted.is_empty() {
                    return Err(Error::Consistency("no boundary samples fall inside the chart cylinder".into()));
                }
                let items = accepted
                    .par_iter()
                    .map(|(t, xi)| -> Result<Worst> {
                        let (xp, xn) = xi.split_at(n - 1);
                        let psi = self.psi(*t, xp)?;
                        let (s, x) = self.frame.to_world(*t, xi);
                        Ok(Worst {
                            residual: (xn[0] - psi).abs(),
                            s,
                            x,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                return Ok(worst_of(items).expect("nonempty"));
            }
            budget *= 2;
        }
    }
}
