//! Parabolic quasi-norm, the metric it induces and the non-isotropic dilation
//! `T_λ(t, x) = (λ²t, λx)`.
//!
//! The quasi-norm `ρ(t, x)` is the unique positive root of
//!
//! ```text
//! F(t, x, ρ) = t²/ρ⁴ + |x|²/ρ² = 1
//! ```
//!
//! and satisfies `ρ(T_λ p) = λ ρ(p)`. Substituting `u = ρ²` turns the defining
//! equation into the quadratic `u² − |x|²u − t² = 0`, which gives the closed
//! form used by [`parabolic_norm`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Certified lower comparability constant: `ρ(t,x) ≥ C₀(|t|^½ + |x|)`.
pub const C0: f64 = 0.5;
/// Certified upper comparability constant: `ρ(t,x) ≤ C₁(|t|^½ + |x|)`.
pub const C1: f64 = 1.0;

/// Slack allowed when checking the certified comparability pair.
const COMPARABILITY_SLACK: f64 = 1e-12;

/// A space-time point `(t, x)` with `x ∈ ℝⁿ`, `n ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicPoint {
    t: f64,
    x: Vec<f64>,
}

impl ParabolicPoint {
    pub fn new(t: f64, x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Domain("spatial dimension must be at least 1".into()));
        }
        if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ParabolicPoint { t, x })
    }

    pub fn origin(n: usize) -> Result<Self> {
        ParabolicPoint::new(0.0, vec![0.0; n])
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }

    #[inline]
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_origin(&self) -> bool {
        self.t == 0.0 && self.x.iter().all(|&v| v == 0.0)
    }

    /// `self − other`, coordinatewise.
    pub fn sub(&self, other: &ParabolicPoint) -> Result<ParabolicPoint> {
        check_same_dim(self, other)?;
        Ok(ParabolicPoint {
            t: self.t - other.t,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a - b).collect(),
        })
    }

    /// `|t|^½ + |x|`, the quantity `ρ` is comparable to.
    pub fn anisotropic_size(&self) -> f64 {
        self.t.abs().sqrt() + norm2(&self.x).sqrt()
    }

    /// Squared Euclidean norm of the point regarded as a vector of `ℝⁿ⁺¹`.
    pub fn euclidean_norm_sq(&self) -> f64 {
        self.t * self.t + norm2(&self.x)
    }
}

fn check_same_dim(p: &ParabolicPoint, q: &ParabolicPoint) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

/// `F(t, x, ρ) = t²/ρ⁴ + |x|²/ρ²`.
///
/// Strictly decreasing in `ρ` away from the origin; identically zero at the
/// origin.
pub fn eval_f(p: &ParabolicPoint, rho: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("F requires rho > 0, got {rho}")));
    }
    let r2 = rho * rho;
    Ok(p.t * p.t / (r2 * r2) + norm2(&p.x) / r2)
}

/// The parabolic quasi-norm `‖(t, x)‖ = ρ(t, x)`.
pub fn parabolic_norm(p: &ParabolicPoint) -> f64 {
    norm_parts(p.t, norm2(&p.x))
}

/// Closed form on `(t, |x|²)`; `hypot` keeps `sqrt(|x|⁴ + 4t²)` from
/// overflowing for large inputs.
#[inline]
pub(crate) fn norm_parts(t: f64, x_sq: f64) -> f64 {
    ((x_sq + x_sq.hypot(2.0 * t)) * 0.5).sqrt()
}

/// `ρ` of the difference of two points given as raw coordinates.
#[inline]
pub(crate) fn norm_of_diff(t1: f64, x1: &[f64], t2: f64, x2: &[f64]) -> f64 {
    let x_sq: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
    norm_parts(t1 - t2, x_sq)
}

/// The parabolic metric `D((t,x),(s,y)) = ρ(t − s, x − y)`.
pub fn metric_distance(p: &ParabolicPoint, q: &ParabolicPoint) -> Result<f64> {
    check_same_dim(p, q)?;
    Ok(norm_of_diff(p.t, &p.x, q.t, &q.x))
}

/// Non-isotropic dilation `T_λ(t, x) = (λ²t, λx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dilation {
    lambda: f64,
}

impl Dilation {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("dilation factor must be positive, got {lambda}")));
        }
        Ok(Dilation { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn apply(&self, p: &ParabolicPoint) -> ParabolicPoint {
        let l = self.lambda;
        ParabolicPoint {
            t: l * l * p.t,
            x: p.x.iter().map(|v| l * v).collect(),
        }
    }

    /// Operator norm of `T_λ` as a linear map of `ℝⁿ⁺¹`: `max{λ, λ²}`.
    pub fn operator_norm(&self) -> f64 {
        self.lambda.max(self.lambda * self.lambda)
    }

    pub fn inverse(&self) -> Dilation {
        Dilation {
            lambda: 1.0 / self.lambda,
        }
    }
}

/// Applies `T_λ` to `p`.
pub fn dilate(d: &Dilation, p: &ParabolicPoint) -> ParabolicPoint {
    d.apply(p)
}

/// Result of [`comparability_check`]: the certified pair `(C₀, C₁)` together
/// with the tightest ratios seen on the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparabilityConstants {
    pub c0: f64,
    pub c1: f64,
    /// Smallest observed `ρ / (|t|^½ + |x|)`.
    pub empirical_min: f64,
    /// Largest observed `ρ / (|t|^½ + |x|)`.
    pub empirical_max: f64,
    /// Samples used (the origin is skipped).
    pub samples: usize,
}

/// `ρ(p) / (|t|^½ + |x|)`, or `None` at the origin.
pub fn comparability_ratio(p: &ParabolicPoint) -> Option<f64> {
    let size = p.anisotropic_size();
    (size > 0.0).then(|| parabolic_norm(p) / size)
}

/// Checks `C₀(|t|^½+|x|) ≤ ρ ≤ C₁(|t|^½+|x|)` with `(C₀, C₁) = (1/2, 1)` on
/// every sample.
pub fn comparability_check(samples: &[ParabolicPoint]) -> Result<ComparabilityConstants> {
    if samples.is_empty() {
        return Err(Error::Domain("comparability check needs at least one sample".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut used = 0usize;
    for p in samples {
        let Some(ratio) = comparability_ratio(p) else {
            continue;
        };
        if ratio < C0 - COMPARABILITY_SLACK || ratio > C1 + COMPARABILITY_SLACK {
            return Err(Error::Consistency(format!(
                "comparability ratio {ratio} outside [{C0}, {C1}] at t={}, x={:?}",
                p.t, p.x
            )));
        }
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        used += 1;
    }
    if used == 0 {
        return Err(Error::Domain("all samples were the origin".into()));
    }
    Ok(ComparabilityConstants {
        c0: C0,
        c1: C1,
        empirical_min: lo,
        empirical_max: hi,
        samples: used,
    })
}
