//! Constructive Lip(1,1/2) implicit function theorem for a scalar implicit
//! variable.
//!
//! Given `f(t, x, y)` with Lip(1,1/2) constant `M`, vertical non-degeneracy
//! `K` and a root `f(a, b) = 0`, [`solve_graph`] produces a neighborhood `V̇`
//! of `a` and the graph function `φ` with `f(t, x, φ(t, x)) = 0` on `V̇`.
//! For scalar `y`, non-degeneracy plus continuity make `f(t, x, ·)` strictly
//! monotone, so `φ` is computed by bracketed bisection on demand.

use std::sync::Arc;

use dashmap::DashMap;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lip::{Lip12Fn, NondegenerateFn, RawPoint, SpaceTimeBox};
use crate::metric::{C0, C1};
use crate::sampling::{random_unit_vector, rng_for, STREAM_MISC};

/// Default tolerance on `|f(a, b)|` for the supplied root.
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;
/// Bisection iteration cap.
pub const MAX_BISECTION_STEPS: usize = 200;
/// Bisection stops once the bracket is narrower than this times `1 + |I|`.
pub const BISECTION_REL_WIDTH: f64 = 1e-14;
/// Neighborhood radii below this abort construction.
pub const MIN_NEIGHBORHOOD_RADIUS: f64 = 1e-9;
/// Random probes on the neighborhood boundary, on top of the structured ones.
pub const RANDOM_BOUNDARY_PROBES: usize = 64;

/// Implicit problem `f(t, x, y) = 0` near a known root `(a, b)`.
#[derive(Debug, Clone)]
pub struct IftProblem {
    f: NondegenerateFn,
    root_t: f64,
    root_x: Vec<f64>,
    root_y: f64,
    root_tol: f64,
    declared_m: f64,
}

impl IftProblem {
    /// `f` must carry a declared Lip(1,1/2) constant and a scalar implicit
    /// block (its last spatial input).
    pub fn new(f: NondegenerateFn, a: (f64, Vec<f64>), b: f64) -> Result<Self> {
        Self::with_root_tol(f, a, b, DEFAULT_ROOT_TOL)
    }

    pub fn with_root_tol(f: NondegenerateFn, a: (f64, Vec<f64>), b: f64, root_tol: f64) -> Result<Self> {
        if f.implicit_dim() != 1 {
            return Err(Error::Domain(format!(
                "only a scalar implicit variable is supported, got dimension {}",
                f.implicit_dim()
            )));
        }
        let declared_m = f
            .base()
            .declared_m()
            .filter(|m| *m > 0.0)
            .ok_or_else(|| Error::Domain("implicit problem needs a positive declared M".into()))?;
        if a.1.len() != f.free_dim() {
            return Err(Error::DimensionMismatch {
                expected: f.free_dim(),
                found: a.1.len(),
            });
        }
        let mut full = a.1.clone();
        full.push(b);
        if !f.base().domain().contains(a.0, &full) {
            return Err(Error::Domain("root (a, b) lies outside the problem box".into()));
        }
        let residual = f.base().eval_scalar(a.0, &full)?;
        if residual.abs() > root_tol {
            return Err(Error::Domain(format!("|f(a, b)| = {residual:e} exceeds root tolerance {root_tol:e}")));
        }
        Ok(IftProblem {
            f,
            root_t: a.0,
            root_x: a.1,
            root_y: b,
            root_tol,
            declared_m,
        })
    }

    pub fn function(&self) -> &NondegenerateFn {
        &self.f
    }

    pub fn root(&self) -> (f64, &[f64], f64) {
        (self.root_t, &self.root_x, self.root_y)
    }

    pub fn root_tol(&self) -> f64 {
        self.root_tol
    }

    pub fn declared_m(&self) -> f64 {
        self.declared_m
    }

    pub fn declared_k(&self) -> f64 {
        self.f.declared_k()
    }

    /// The `(t, x)` part of the problem box.
    pub fn base_box(&self) -> SpaceTimeBox {
        self.f.base().domain().split_tail(1).0
    }

    pub fn y_interval(&self) -> (f64, f64) {
        *self.f.base().domain().x_ranges().last().expect("implicit block present")
    }

    fn eval(&self, t: f64, x: &[f64], y: f64) -> Result<f64> {
        Ok(self.f.eval_split(t, x, &[y])?[0])
    }
}

/// Constants of the construction: `ε`, `p`, `q` and the Lip bound `M′` of `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IftConstants {
    pub m: f64,
    pub k: f64,
    pub epsilon: f64,
    /// `p = C₁(1 + εM)`; `g` is `p/C₀`-Lipschitz.
    pub p: f64,
    /// `q = min{C₀(1 − Mε), C₀Kε}`; `g` is bounded below by `q/C₁`.
    pub q: f64,
    /// `M′ = C₁²/(C₀ q)`.
    pub m_prime: f64,
}

/// Picks `ε = 1/(M + K)`, which equalizes the two terms of `q` and so
/// minimizes `M′`.
pub fn choose_constants(m: f64, k: f64) -> Result<IftConstants> {
    if !(m > 0.0) || !(k > 0.0) || !m.is_finite() || !k.is_finite() {
        return Err(Error::Domain(format!("constants must be positive and finite, got M={m}, K={k}")));
    }
    let epsilon = 1.0 / (m + k);
    let p = C1 * (1.0 + epsilon * m);
    let q = (C0 * (1.0 - m * epsilon)).min(C0 * k * epsilon);
    let m_prime = C1 * C1 / (C0 * q);
    Ok(IftConstants {
        m,
        k,
        epsilon,
        p,
        q,
        m_prime,
    })
}

/// The auxiliary map `g(t, x, y) = (t, x, εf(t, x, y))`, taking the joint
/// spatial vector `(x, y)`.
pub fn build_g(problem: &IftProblem, constants: &IftConstants) -> impl Fn(f64, &[f64]) -> Result<RawPoint> + Send + Sync {
    let f = problem.f.clone();
    let eps = constants.epsilon;
    move |t, xy| {
        let v = f.base().eval_scalar(t, xy)?;
        let mut out = xy[..xy.len() - 1].to_vec();
        out.push(eps * v);
        Ok((t, out))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NeighborhoodShape {
    /// Halving scales both radii by 1/2.
    Euclidean,
    /// Halving scales the spatial radius by 1/2 and the time radius by 1/4.
    Parabolic,
}

/// Ellipsoidal neighborhood `((t − a_t)/r_t)² + |x − a_x|²/r_x² < 1`,
/// intersected with the time range `t_range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub center_t: f64,
    pub center_x: Vec<f64>,
    pub t_radius: f64,
    pub x_radius: f64,
    pub t_range: (f64, f64),
    pub shape: NeighborhoodShape,
}

impl Neighborhood {
    /// Largest Euclidean ball around `(t, x)` inside `domain`, separately
    /// sized in time and space.
    pub fn inscribed(domain: &SpaceTimeBox, t: f64, x: &[f64]) -> Self {
        let (tlo, thi) = domain.t_range();
        let t_radius = (t - tlo).min(thi - t);
        let x_radius = x
            .iter()
            .zip(domain.x_ranges())
            .map(|(v, r)| (v - r.0).min(r.1 - v))
            .fold(f64::INFINITY, f64::min);
        Neighborhood {
            center_t: t,
            center_x: x.to_vec(),
            t_radius,
            x_radius: if x.is_empty() { 0.0 } else { x_radius },
            t_range: (tlo, thi),
            shape: NeighborhoodShape::Euclidean,
        }
    }

    /// Controlling radius for the underflow check.
    pub fn radius(&self) -> f64 {
        match (self.shape, self.center_x.is_empty()) {
            (_, true) => self.t_radius,
            (NeighborhoodShape::Euclidean, false) => self.t_radius.min(self.x_radius),
            (NeighborhoodShape::Parabolic, false) => self.x_radius.min(self.t_radius.sqrt()),
        }
    }

    pub fn halved(&self) -> Self {
        let mut n = self.clone();
        n.x_radius *= 0.5;
        n.t_radius *= match self.shape {
            NeighborhoodShape::Euclidean => 0.5,
            NeighborhoodShape::Parabolic => 0.25,
        };
        n
    }

    /// Normalized ellipsoid coordinate: `< 1` inside.
    pub fn level(&self, t: f64, x: &[f64]) -> f64 {
        let dt = (t - self.center_t) / self.t_radius;
        let dx2: f64 = x.iter().zip(&self.center_x).map(|(a, b)| (a - b) * (a - b)).sum();
        let sx = if self.x_radius > 0.0 { dx2 / (self.x_radius * self.x_radius) } else { 0.0 };
        dt * dt + sx
    }

    pub fn contains(&self, t: f64, x: &[f64]) -> bool {
        x.len() == self.center_x.len() && t >= self.t_range.0 && t <= self.t_range.1 && self.level(t, x) < 1.0
    }

    /// Containment in the neighborhood with both radii scaled by `factor`.
    pub fn contains_scaled(&self, t: f64, x: &[f64], factor: f64) -> bool {
        x.len() == self.center_x.len()
            && t >= self.t_range.0
            && t <= self.t_range.1
            && self.level(t, x) < factor * factor
    }

    /// Point on the ellipsoid at unit direction `dir ∈ S^m`, scaled by `r`,
    /// with time clamped into `t_range`.
    fn at(&self, dir: &[f64], r: f64) -> (f64, Vec<f64>) {
        let t = (self.center_t + r * dir[0] * self.t_radius).clamp(self.t_range.0, self.t_range.1);
        let x = self
            .center_x
            .iter()
            .zip(&dir[1..])
            .map(|(c, d)| c + r * d * self.x_radius)
            .collect();
        (t, x)
    }

    /// Boundary probes: sign-pattern diagonals, axis points, and
    /// [`RANDOM_BOUNDARY_PROBES`] random directions.
    pub fn boundary_probes(&self, seed: u64) -> Vec<(f64, Vec<f64>)> {
        let d = 1 + self.center_x.len();
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        if d <= 10 {
            let scale = 1.0 / (d as f64).sqrt();
            for mask in 0u32..(1 << d) {
                dirs.push((0..d).map(|i| if mask >> i & 1 == 1 { -scale } else { scale }).collect());
            }
        }
        for i in 0..d {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[i] = sign;
                dirs.push(e);
            }
        }
        let mut rng = rng_for(seed, STREAM_MISC + 17);
        for _ in 0..RANDOM_BOUNDARY_PROBES {
            dirs.push(random_unit_vector(&mut rng, d));
        }
        // Probes sit a hair inside the open set.
        let r = 1.0 - 1e-12;
        dirs.iter().map(|dir| self.at(dir, r)).collect()
    }

    /// Uniform sample from the neighborhood interior (rejection against the
    /// time range).
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Vec<f64>) {
        let d = 1 + self.center_x.len();
        for _ in 0..10_000 {
            let dir = random_unit_vector(rng, d);
            let r = rng.gen::<f64>().powf(1.0 / d as f64) * (1.0 - 1e-9);
            let t = self.center_t + r * dir[0] * self.t_radius;
            if t < self.t_range.0 || t > self.t_range.1 {
                continue;
            }
            let x = self
                .center_x
                .iter()
                .zip(&dir[1..])
                .map(|(c, v)| c + r * v * self.x_radius)
                .collect();
            return (t, x);
        }
        (self.center_t, self.center_x.clone())
    }

    /// Axis-aligned box inscribed in the neighborhood.
    pub fn inscribed_box(&self) -> Result<SpaceTimeBox> {
        let m = self.center_x.len();
        let (th, xh) = if m == 0 {
            (self.t_radius * (1.0 - 1e-9), 0.0)
        } else {
            (
                self.t_radius / 2f64.sqrt() * (1.0 - 1e-9),
                self.x_radius / (2.0 * m as f64).sqrt() * (1.0 - 1e-9),
            )
        };
        let t = (
            (self.center_t - th).max(self.t_range.0),
            (self.center_t + th).min(self.t_range.1),
        );
        SpaceTimeBox::new(t, self.center_x.iter().map(|c| (c - xh, c + xh)).collect())
    }
}

/// Graph `y = φ(t, x)` of the zero set of `f` over the neighborhood `V̇`.
///
/// `φ` is evaluated lazily and memoized by the exact bits of `(t, x)`; every
/// query of the same input returns the same bits.
#[derive(Debug, Clone)]
pub struct ImplicitGraph {
    problem: Arc<IftProblem>,
    neighborhood: Neighborhood,
    constants: IftConstants,
    residual_tol: f64,
    memo: Arc<DashMap<(u64, Vec<u64>), f64>>,
}

/// Solves on the largest neighborhood inscribed in the problem box.
pub fn solve_graph(problem: IftProblem) -> Result<ImplicitGraph> {
    let start = Neighborhood::inscribed(&problem.base_box(), problem.root_t, &problem.root_x);
    solve_graph_in(problem, start)
}

/// Solves starting from `start`, halving it until every boundary probe
/// brackets a root of `f(t, x, ·)` on the implicit interval.
pub fn solve_graph_in(problem: IftProblem, start: Neighborhood) -> Result<ImplicitGraph> {
    let constants = choose_constants(problem.declared_m, problem.declared_k())?;
    let (ylo, yhi) = problem.y_interval();
    let (at, ax) = (problem.root_t, problem.root_x.clone());
    if !brackets(&problem, at, &ax)? {
        return Err(Error::Nondegeneracy(format!(
            "f(a, ·) has no sign change on [{ylo}, {yhi}]"
        )));
    }
    let mut nbhd = start;
    loop {
        if !(nbhd.radius() >= MIN_NEIGHBORHOOD_RADIUS) {
            return Err(Error::NeighborhoodUnderflow { radius: nbhd.radius() });
        }
        let mut ok = true;
        for (t, x) in nbhd.boundary_probes(0) {
            if !brackets(&problem, t, &x)? {
                ok = false;
                break;
            }
        }
        if ok {
            break;
        }
        nbhd = nbhd.halved();
    }
    let width = BISECTION_REL_WIDTH * (1.0 + (yhi - ylo));
    let residual_tol = DEFAULT_ROOT_TOL + problem.declared_m * width;
    Ok(ImplicitGraph {
        problem: Arc::new(problem),
        neighborhood: nbhd,
        constants,
        residual_tol,
        memo: Arc::new(DashMap::new()),
    })
}

fn brackets(problem: &IftProblem, t: f64, x: &[f64]) -> Result<bool> {
    let (ylo, yhi) = problem.y_interval();
    let lo = problem.eval(t, x, ylo)?;
    let hi = problem.eval(t, x, yhi)?;
    Ok(lo == 0.0 || hi == 0.0 || (lo < 0.0) != (hi < 0.0))
}

/// Bracketed bisection for the root of `g` on `[lo, hi]`.
pub(crate) fn bisect<G>(g: G, mut lo: f64, mut hi: f64, rel_width: f64) -> Result<Option<f64>>
where
    G: Fn(f64) -> Result<f64>,
{
    let mut glo = g(lo)?;
    let ghi = g(hi)?;
    if glo == 0.0 {
        return Ok(Some(lo));
    }
    if ghi == 0.0 {
        return Ok(Some(hi));
    }
    if (glo < 0.0) == (ghi < 0.0) {
        return Ok(None);
    }
    let stop = rel_width * (1.0 + (hi - lo));
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo < stop {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(Some(mid));
        }
        if (gm < 0.0) == (glo < 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Sample-scale check that the zero set of `f` over `V̇ × I` is the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSetReport {
    pub probes: usize,
    pub zeros_found: usize,
    /// Largest `|f(t, x, φ(t, x))|`.
    pub max_graph_residual: f64,
    /// Largest distance from a located zero to the graph.
    pub max_zero_distance: f64,
    /// Probes where `f(t, x, ·)` changed sign more than once.
    pub extra_zero_probes: usize,
    pub passed: bool,
}

impl ImplicitGraph {
    pub fn neighborhood(&self) -> &Neighborhood {
        &self.neighborhood
    }

    pub fn constants(&self) -> &IftConstants {
        &self.constants
    }

    pub fn residual_tol(&self) -> f64 {
        self.residual_tol
    }

    pub fn problem(&self) -> &IftProblem {
        &self.problem
    }

    pub fn y_interval(&self) -> (f64, f64) {
        self.problem.y_interval()
    }

    pub fn contains(&self, t: f64, x: &[f64]) -> bool {
        self.neighborhood.contains(t, x)
    }

    /// `φ(t, x)`; fails outside `V̇`.
    pub fn phi(&self, t: f64, x: &[f64]) -> Result<f64> {
        if !self.neighborhood.contains(t, x) {
            return Err(Error::OutsideNeighborhood);
        }
        self.phi_unchecked(t, x)
    }

    fn phi_unchecked(&self, t: f64, x: &[f64]) -> Result<f64> {
        let key = (t.to_bits(), x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        let (ylo, yhi) = self.problem.y_interval();
        let y = bisect(|y| self.problem.eval(t, x, y), ylo, yhi, BISECTION_REL_WIDTH)?.ok_or_else(|| {
            Error::NoBracket {
                t,
                x: x.to_vec(),
            }
        })?;
        // Racing writers compute identical bits, so either insert wins.
        self.memo.entry(key).or_insert(y);
        Ok(y)
    }

    /// `φ(t, x)` without touching the memo table, for bulk one-off queries.
    pub fn phi_uncached(&self, t: f64, x: &[f64]) -> Result<f64> {
        if !self.neighborhood.contains(t, x) {
            return Err(Error::OutsideNeighborhood);
        }
        let (ylo, yhi) = self.problem.y_interval();
        bisect(|y| self.problem.eval(t, x, y), ylo, yhi, BISECTION_REL_WIDTH)?.ok_or_else(|| Error::NoBracket {
            t,
            x: x.to_vec(),
        })
    }

    /// `|f(t, x, φ(t, x))|`.
    pub fn residual(&self, t: f64, x: &[f64]) -> Result<f64> {
        let y = self.phi(t, x)?;
        Ok(self.problem.eval(t, x, y)?.abs())
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    /// `φ` as a Lip(1,1/2) function on a box inscribed in `V̇`, declared with
    /// the bound `M′`.
    pub fn as_lip12fn(&self) -> Result<Lip12Fn> {
        let graph = self.clone();
        let domain = self.neighborhood.inscribed_box()?;
        Ok(Lip12Fn::fallible(domain, 1, move |t, x| Ok(vec![graph.phi(t, x)?]))
            .with_declared_m(self.constants.m_prime))
    }

    /// Scans `f(t, x, ·)` on a `y_grid`-point grid at `probes` random
    /// `(t, x) ∈ V̇`, refines every sign change independently and compares
    /// the zeros found with `φ`.
    pub fn verify_zero_set(&self, probes: usize, y_grid: usize, seed: u64) -> Result<ZeroSetReport> {
        let (ylo, yhi) = self.problem.y_interval();
        let k = self.problem.declared_k();
        let mut rng = rng_for(seed, STREAM_MISC + 29);
        let mut report = ZeroSetReport {
            probes,
            zeros_found: 0,
            max_graph_residual: 0.0,
            max_zero_distance: 0.0,
            extra_zero_probes: 0,
            passed: true,
        };
        let n = y_grid.max(2);
        for _ in 0..probes {
            let (t, x) = self.neighborhood.sample_interior(&mut rng);
            let phi = self.phi(t, &x)?;
            report.max_graph_residual = report.max_graph_residual.max(self.problem.eval(t, &x, phi)?.abs());
            let ys: Vec<f64> = (0..n).map(|i| ylo + (yhi - ylo) * i as f64 / (n - 1) as f64).collect();
            let vals = ys.iter().map(|&y| self.problem.eval(t, &x, y)).collect::<Result<Vec<_>>>()?;
            let mut zeros = Vec::new();
            for i in 0..n - 1 {
                if vals[i] == 0.0 {
                    zeros.push(ys[i]);
                } else if vals[i + 1] != 0.0 && (vals[i] < 0.0) != (vals[i + 1] < 0.0) {
                    if let Some(z) = bisect(|y| self.problem.eval(t, &x, y), ys[i], ys[i + 1], BISECTION_REL_WIDTH)? {
                        zeros.push(z);
                    }
                }
            }
            if vals[n - 1] == 0.0 {
                zeros.push(ys[n - 1]);
            }
            if zeros.len() > 1 {
                report.extra_zero_probes += 1;
            }
            for z in &zeros {
                report.max_zero_distance = report.max_zero_distance.max((z - phi).abs());
            }
            report.zeros_found += zeros.len();
        }
        report.passed = report.extra_zero_probes == 0
            && report.max_graph_residual <= self.residual_tol
            && report.max_zero_distance <= self.residual_tol / k + BISECTION_REL_WIDTH * (1.0 + (yhi - ylo));
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ift_example() -> IftProblem {
        let b = SpaceTimeBox::new((-2.0, 2.0), vec![(-2.0, 2.0), (-3.0, 3.0)]).unwrap();
        let f = Lip12Fn::scalar(b, |t, v| 2.0 * v[1] - v[0].sin() - t.abs().sqrt()).with_declared_m(2.0);
        IftProblem::new(NondegenerateFn::new(f, 1, 2.0).unwrap(), (0.0, vec![0.0]), 0.0).unwrap()
    }

    #[test]
    fn constants_examples() {
        let c = choose_constants(2.0, 2.0).unwrap();
        assert_eq!(c.epsilon, 0.25);
        assert_eq!(c.q, 0.25);
        assert_eq!(c.m_prime, 8.0);
        assert_eq!(c.p, 1.5);
        let c = choose_constants(2.0, 1.0).unwrap();
        assert!((c.epsilon - 1.0 / 3.0).abs() < 1e-16);
        assert!((c.q - 1.0 / 6.0).abs() < 1e-16);
        assert!(choose_constants(0.0, 1.0).is_err());
        assert!(choose_constants(1.0, -1.0).is_err());
    }

    #[test]
    fn epsilon_below_inverse_m() {
        for &(m, k) in &[(0.1, 10.0), (1.0, 1.0), (50.0, 0.01), (3.0, 7.0)] {
            let c = choose_constants(m, k).unwrap();
            assert!(c.epsilon < 1.0 / m);
            assert!(c.q > 0.0);
        }
    }

    #[test]
    fn g_fixes_the_root() {
        let p = ift_example();
        let g = build_g(&p, &choose_constants(2.0, 2.0).unwrap());
        assert_eq!(g(0.0, &[0.0, 0.0]).unwrap(), (0.0, vec![0.0, 0.0]));
    }

    #[test]
    fn constant_graph() {
        let b = SpaceTimeBox::new((-1.0, 1.0), vec![(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        let f = Lip12Fn::scalar(b, |_, v| v[1] - 0.3).with_declared_m(1.0);
        let p = IftProblem::new(NondegenerateFn::new(f, 1, 1.0).unwrap(), (0.0, vec![0.0]), 0.3).unwrap();
        let g = solve_graph(p).unwrap();
        for (t, x) in [(0.1, 0.2), (-0.5, 0.3), (0.0, -0.7)] {
            assert!((g.phi(t, &[x]).unwrap() - 0.3).abs() < 1e-13);
        }
    }

    #[test]
    fn closed_form_example() {
        let g = solve_graph(ift_example()).unwrap();
        assert!((g.phi(1.0, &[0.0]).unwrap() - 0.5).abs() < 1e-12);
        for (t, x) in [(0.3f64, 0.4f64), (-0.8, -1.1), (1.5, 0.2)] {
            let expect = (x.sin() + t.abs().sqrt()) / 2.0;
            assert!((g.phi(t, &[x]).unwrap() - expect).abs() < 1e-12);
        }
        assert!(matches!(g.phi(0.0, &[2.5]), Err(Error::OutsideNeighborhood)));
    }

    #[test]
    fn memo_returns_identical_bits() {
        let g = solve_graph(ift_example()).unwrap();
        let a = g.phi(0.123, &[0.456]).unwrap();
        assert_eq!(g.memo_len(), 1);
        let b = g.phi(0.123, &[0.456]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(g.memo_len(), 1);
    }

    #[test]
    fn missing_sign_change_is_rejected() {
        let b = SpaceTimeBox::new((-1.0, 1.0), vec![(-1.0, 1.0), (0.0, 1.0)]).unwrap();
        // f = y² vanishes at y = 0 but never changes sign.
        let f = Lip12Fn::scalar(b, |_, v| v[1] * v[1] + 1e-3).with_declared_m(2.0);
        let nd = NondegenerateFn::new(f, 1, 0.5).unwrap();
        let p = IftProblem::with_root_tol(nd, (0.0, vec![0.0]), 0.0, 1e-2).unwrap();
        assert!(matches!(solve_graph(p), Err(Error::Nondegeneracy(_))));
    }

    #[test]
    fn neighborhood_shrinks_until_bracketed() {
        // Zero at y = x₀²·4: only brackets inside y ∈ [−1, 1] for |x₀| < 1/2.
        let b = SpaceTimeBox::new((-1.0, 1.0), vec![(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        let f = Lip12Fn::scalar(b, |_, v| v[1] - 4.0 * v[0] * v[0]).with_declared_m(8.0);
        let p = IftProblem::new(NondegenerateFn::new(f, 1, 1.0).unwrap(), (0.0, vec![0.0]), 0.0).unwrap();
        let g = solve_graph(p).unwrap();
        assert!(g.neighborhood().x_radius <= 0.5);
        assert!(g.neighborhood().x_radius >= 0.25);
    }

    #[test]
    fn underflow_is_reported() {
        let b = SpaceTimeBox::new((-1.0, 1.0), vec![(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        // The root drifts out of I immediately for any t ≠ 0.
        let f = Lip12Fn::scalar(b, |t, v| v[1] - t.signum() * 5.0 * t.abs().powf(0.01)).with_declared_m(1e3);
        let p = IftProblem::new(NondegenerateFn::new(f, 1, 1.0).unwrap(), (0.0, vec![0.0]), 0.0).unwrap();
        assert!(matches!(solve_graph(p), Err(Error::NeighborhoodUnderflow { .. })));
    }

    #[test]
    fn problem_validation() {
        let b = SpaceTimeBox::new((-1.0, 1.0), vec![(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        let f = Lip12Fn::scalar(b.clone(), |_, v| v[1]);
        let nd = NondegenerateFn::new(f.clone(), 1, 1.0).unwrap();
        // No declared M.
        assert!(IftProblem::new(nd, (0.0, vec![0.0]), 0.0).is_err());
        let nd = NondegenerateFn::new(f.with_declared_m(1.0), 1, 1.0).unwrap();
        assert!(IftProblem::new(nd.clone(), (0.0, vec![0.0]), 0.5).is_err());
        assert!(IftProblem::new(nd.clone(), (0.0, vec![0.0, 1.0]), 0.0).is_err());
        assert!(IftProblem::new(nd, (5.0, vec![0.0]), 0.0).is_err());
    }

    #[test]
    fn zero_set_equals_graph() {
        let g = solve_graph(ift_example()).unwrap();
        let r = g.verify_zero_set(1000, 100, 4).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.zeros_found, 1000);
        assert_eq!(r.extra_zero_probes, 0);
    }

    #[test]
    fn probes_stay_inside_time_range() {
        let n = Neighborhood {
            center_t: 0.0,
            center_x: vec![0.0, 0.0],
            t_radius: 1.0,
            x_radius: 0.5,
            t_range: (0.0, 0.3),
            shape: NeighborhoodShape::Parabolic,
        };
        for (t, x) in n.boundary_probes(1) {
            assert!((0.0..=0.3).contains(&t));
            assert!(n.level(t, &x) <= 1.0);
        }
        let mut rng = rng_for(2, 0);
        for _ in 0..100 {
            let (t, x) = n.sample_interior(&mut rng);
            assert!(n.contains(t, &x));
        }
        let h = n.halved();
        assert_eq!((h.t_radius, h.x_radius), (0.25, 0.25));
        let bx = n.inscribed_box().unwrap();
        assert_eq!(bx.t_range().0, 0.0);
    }
}
