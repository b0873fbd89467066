//! Non-cylindrical star-like space-time domains
//! `Ω = {(s, rω) : s ∈ [T₀, T₁], 0 ≤ r < φ(s, ω)}`.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::check_unit;
use crate::metric::{norm2, ParabolicPoint};
use crate::sampling::{random_unit_vector, rng_for, stratified_cylinder, STREAM_MISC};

/// Radial function `φ(s, ω)`.
pub type RadialFn = Arc<dyn Fn(f64, &[f64]) -> Result<f64> + Send + Sync>;

#[derive(Clone)]
pub struct StarlikeDomain {
    radial: RadialFn,
    delta0: f64,
    k0: f64,
    m_const: f64,
    window: (f64, f64),
    n: usize,
}

impl std::fmt::Debug for StarlikeDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StarlikeDomain")
            .field("n", &self.n)
            .field("window", &self.window)
            .field("delta0", &self.delta0)
            .field("k0", &self.k0)
            .field("m_const", &self.m_const)
            .finish_non_exhaustive()
    }
}

impl StarlikeDomain {
    pub fn new<F>(n: usize, window: (f64, f64), delta0: f64, k0: f64, m_const: f64, radial: F) -> Result<Self>
    where
        F: Fn(f64, &[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        if n < 2 {
            return Err(Error::Domain(format!("spatial dimension must be at least 2, got {n}")));
        }
        if !(window.0 < window.1) || !window.0.is_finite() || !window.1.is_finite() {
            return Err(Error::Domain(format!("time window [{}, {}] is not a finite interval", window.0, window.1)));
        }
        if !(0.0 < delta0 && delta0 < k0 && k0.is_finite()) {
            return Err(Error::Domain(format!("need 0 < delta0 < k0 < inf, got delta0={delta0}, k0={k0}")));
        }
        if !(m_const >= 0.0 && m_const.is_finite()) {
            return Err(Error::Domain(format!("M must be finite and non-negative, got {m_const}")));
        }
        Ok(StarlikeDomain {
            radial: Arc::new(radial),
            delta0,
            k0,
            m_const,
            window,
            n,
        })
    }

    /// Cylinder over a time-independent radial function.
    pub fn constant_in_time<F>(n: usize, window: (f64, f64), delta0: f64, k0: f64, m_const: f64, radial: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        Self::new(n, window, delta0, k0, m_const, move |_, w| radial(w))
    }

    pub fn spatial_dim(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn m_const(&self) -> f64 {
        self.m_const
    }

    pub fn radial_fn(&self) -> &RadialFn {
        &self.radial
    }

    pub fn check_time(&self, s: f64) -> Result<()> {
        if s >= self.window.0 && s <= self.window.1 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "time {s} outside window [{}, {}]",
                self.window.0, self.window.1
            )))
        }
    }

    /// `φ(s, ω)` without window or unit checks.
    pub fn radius_unchecked(&self, s: f64, omega: &[f64]) -> Result<f64> {
        let r = (self.radial)(s, omega)?;
        if r.is_finite() {
            Ok(r)
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn radius(&self, s: f64, omega: &[f64]) -> Result<f64> {
        self.check_time(s)?;
        self.check_dim(omega.len())?;
        check_unit(omega)?;
        self.radius_unchecked(s, omega)
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.n, found })
        }
    }

    /// `x = 0` or `|x| < φ(s, x/|x|)`.
    pub fn contains(&self, s: f64, x: &[f64]) -> Result<bool> {
        self.check_time(s)?;
        self.check_dim(x.len())?;
        let r = norm2(x).sqrt();
        if r == 0.0 {
            return Ok(true);
        }
        let omega: Vec<f64> = x.iter().map(|v| v / r).collect();
        Ok(r < self.radius_unchecked(s, &omega)?)
    }

    /// `(s, φ(s, ω) ω)`.
    pub fn boundary_point(&self, s: f64, omega: &[f64]) -> Result<ParabolicPoint> {
        let r = self.radius(s, omega)?;
        ParabolicPoint::new(s, omega.iter().map(|w| r * w).collect())
    }

    pub fn time_slice(&self, s: f64) -> Result<SliceDomain> {
        self.check_time(s)?;
        Ok(SliceDomain {
            domain: self.clone(),
            s,
        })
    }

    /// Samples the boundary on a stratified `(s, ω)` design.
    pub fn sample_boundary(&self, count: usize, seed: u64) -> Result<Vec<BoundaryRow>> {
        stratified_cylinder(self.n, self.window, count, seed)
            .into_iter()
            .map(|(s, w)| BoundaryRow::new(self, s, w))
            .collect()
    }
}

/// Elliptic star-like domain `Ω(s) = {rω : r < φ(s, ω)}`.
#[derive(Debug, Clone)]
pub struct SliceDomain {
    domain: StarlikeDomain,
    s: f64,
}

impl SliceDomain {
    pub fn time(&self) -> f64 {
        self.s
    }

    pub fn radius(&self, omega: &[f64]) -> Result<f64> {
        self.domain.radius(self.s, omega)
    }

    /// The domain's `M`, which bounds the chordal Lipschitz constant of the
    /// slice's radial function.
    pub fn lipschitz_bound(&self) -> f64 {
        self.domain.m_const
    }

    /// Sample-scale chordal Lipschitz constant of `ω ↦ φ(s, ω)`: random pairs
    /// plus perturbations `|Δω| ≈ 2⁻ᵏ` around each sampled direction.
    pub fn estimate_lipschitz(&self, budget: usize, seed: u64) -> Result<f64> {
        let n = self.domain.n;
        let mut rng = rng_for(seed, STREAM_MISC + 41);
        let dirs: Vec<Vec<f64>> = (0..budget.max(2)).map(|_| random_unit_vector(&mut rng, n)).collect();
        let vals = dirs.iter().map(|w| self.radius(w)).collect::<Result<Vec<_>>>()?;
        let mut best: f64 = 0.0;
        let mut offer = |a: &[f64], fa: f64, b: &[f64], fb: f64| {
            let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            if d > 0.0 {
                best = best.max((fa - fb).abs() / d);
            }
        };
        for i in 1..dirs.len() {
            offer(&dirs[i], vals[i], &dirs[i - 1], vals[i - 1]);
            let j = rng.gen_range(0..i);
            offer(&dirs[i], vals[i], &dirs[j], vals[j]);
        }
        for (w, fw) in dirs.iter().zip(&vals) {
            let u = random_unit_vector(&mut rng, n);
            for k in 1..=20 {
                let h = 0.5f64.powi(k);
                let mut v: Vec<f64> = w.iter().zip(&u).map(|(a, b)| a + h * b).collect();
                let norm = norm2(&v).sqrt();
                if norm == 0.0 {
                    continue;
                }
                v.iter_mut().for_each(|c| *c /= norm);
                let fv = self.radius(&v)?;
                offer(w, *fw, &v, fv);
            }
        }
        Ok(best)
    }
}

/// Residual `|ω₁ − ω₂|² − (|r₁ω₁ − r₂ω₂|² − |r₁ − r₂|²)/(r₁r₂)` of the
/// chord identity relating polar and Cartesian distances.
pub fn sphere_chord_identity(omega1: &[f64], omega2: &[f64], r1: f64, r2: f64) -> Result<f64> {
    if omega1.len() != omega2.len() {
        return Err(Error::DimensionMismatch {
            expected: omega1.len(),
            found: omega2.len(),
        });
    }
    check_unit(omega1)?;
    check_unit(omega2)?;
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::Domain(format!("radii must be positive, got {r1}, {r2}")));
    }
    let chord: f64 = omega1.iter().zip(omega2).map(|(a, b)| (a - b) * (a - b)).sum();
    let cart: f64 = omega1.iter().zip(omega2).map(|(a, b)| (r1 * a - r2 * b).powi(2)).sum();
    Ok(chord - (cart - (r1 - r2).powi(2)) / (r1 * r2))
}

/// One sampled boundary point in polar and Cartesian form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub s: f64,
    pub omega: Vec<f64>,
    pub r: f64,
    pub x: Vec<f64>,
}

impl BoundaryRow {
    pub fn new(d: &StarlikeDomain, s: f64, omega: Vec<f64>) -> Result<Self> {
        let r = d.radius(s, &omega)?;
        let x = omega.iter().map(|w| r * w).collect();
        Ok(BoundaryRow { s, omega, r, x })
    }

    /// Row from a Cartesian point: `r = |x|`, `ω = x/r`.
    pub fn from_cartesian(s: f64, x: Vec<f64>) -> Self {
        let r = norm2(&x).sqrt();
        let omega = x.iter().map(|v| v / r).collect();
        BoundaryRow { s, omega, r, x }
    }
}

/// CSV with header `s,omega_1..omega_n,r,x_1..x_n`, full round-trip
/// precision.
pub fn write_boundary_csv<W: Write>(out: &mut W, n: usize, rows: &[BoundaryRow]) -> std::io::Result<()> {
    let mut header = vec!["s".to_string()];
    header.extend((1..=n).map(|i| format!("omega_{i}")));
    header.push("r".into());
    header.extend((1..=n).map(|i| format!("x_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let mut cells = vec![format!("{:?}", row.s)];
        cells.extend(row.omega.iter().map(|v| format!("{v:?}")));
        cells.push(format!("{:?}", row.r));
        cells.extend(row.x.iter().map(|v| format!("{v:?}")));
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
