//! Rotations about the time axis plus time translations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::norm2;

/// Unit-vector tolerance for directions handed to the frame and domain APIs.
pub const UNIT_TOL: f64 = 1e-12;

/// Local coordinates `(t, ξ) = (s − τ, R x)` with `R` orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFrame {
    rotation: DMatrix<f64>,
    time_shift: f64,
}

/// Serialized form: the rotation as row vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameManifest {
    pub rotation: Vec<Vec<f64>>,
    pub time_shift: f64,
    pub determinant: f64,
}

impl SpatialFrame {
    /// Fails unless `RᵀR = I` within `1e-12` per entry.
    pub fn new(rotation: DMatrix<f64>, time_shift: f64) -> Result<Self> {
        if !rotation.is_square() || rotation.nrows() == 0 {
            return Err(Error::Domain("frame matrix must be square and nonempty".into()));
        }
        let frame = SpatialFrame { rotation, time_shift };
        let err = frame.orthogonality_error();
        if !(err <= 1e-12) || !time_shift.is_finite() {
            return Err(Error::Domain(format!("frame matrix is not orthogonal (error {err:e})")));
        }
        Ok(frame)
    }

    pub fn identity(n: usize, time_shift: f64) -> Self {
        SpatialFrame {
            rotation: DMatrix::identity(n, n),
            time_shift,
        }
    }

    pub fn with_time_shift(mut self, tau: f64) -> Self {
        self.time_shift = tau;
        self
    }

    pub fn dim(&self) -> usize {
        self.rotation.nrows()
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn time_shift(&self) -> f64 {
        self.time_shift
    }

    /// Largest entry of `|RᵀR − I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.dim();
        let g = self.rotation.transpose() * &self.rotation - DMatrix::<f64>::identity(n, n);
        g.amax()
    }

    pub fn determinant(&self) -> f64 {
        self.rotation.determinant()
    }

    /// `R v`.
    pub fn rotate(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.rotation[(i, j)] * v[j]).sum()).collect()
    }

    /// `Rᵀ v`.
    pub fn unrotate(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.rotation[(j, i)] * v[j]).sum()).collect()
    }

    /// World `(s, x)` to local `(t, ξ)`.
    pub fn to_local(&self, s: f64, x: &[f64]) -> (f64, Vec<f64>) {
        (s - self.time_shift, self.rotate(x))
    }

    /// Local `(t, ξ)` to world `(s, x)`.
    pub fn to_world(&self, t: f64, xi: &[f64]) -> (f64, Vec<f64>) {
        (t + self.time_shift, self.unrotate(xi))
    }

    /// Frame applied after the world rotation `Q`: local coordinates of
    /// `Q x` under the result equal local coordinates of `x` under `self`.
    pub fn precomposed(&self, q: &DMatrix<f64>) -> Self {
        SpatialFrame {
            rotation: &self.rotation * q.transpose(),
            time_shift: self.time_shift,
        }
    }

    pub fn manifest(&self) -> FrameManifest {
        FrameManifest {
            rotation: self.rotation.row_iter().map(|r| r.iter().copied().collect()).collect(),
            time_shift: self.time_shift,
            determinant: self.determinant(),
        }
    }
}

/// Checks `|ω| = 1` within [`UNIT_TOL`].
pub fn check_unit(omega: &[f64]) -> Result<()> {
    let norm = norm2(omega).sqrt();
    if omega.iter().all(|v| v.is_finite()) && (norm - 1.0).abs() <= UNIT_TOL {
        Ok(())
    } else {
        Err(Error::Domain(format!("direction must be a unit vector, |ω| = {norm}")))
    }
}

/// Rotation `R` with `R ω₀ = eₙ` and `det R = +1`.
///
/// `R = S H` where `H` is the Householder reflection swapping `ω₀` and `eₙ`
/// and `S` flips the first coordinate. `S eₙ = eₙ` for `n ≥ 2`, and the two
/// reflections compose to a rotation. When `ω₀ = eₙ` the result is `I`.
pub fn frame_to_pole(omega0: &[f64]) -> Result<SpatialFrame> {
    check_unit(omega0)?;
    let n = omega0.len();
    if n == 1 {
        // O(1) = {±1}; only ω₀ = 1 admits det +1.
        if omega0[0] > 0.0 {
            return Ok(SpatialFrame::identity(1, 0.0));
        }
        return Err(Error::Domain("no rotation of the line maps −1 to +1".into()));
    }
    let mut v = DVector::from_column_slice(omega0);
    let wn = omega0[n - 1];
    // ωₙ − 1 cancels near the pole; use −|ω′|²/(1 + ωₙ) there.
    v[n - 1] = if wn > 0.0 { -norm2(&omega0[..n - 1]) / (1.0 + wn) } else { wn - 1.0 };
    let vv = v.norm_squared();
    if vv <= 1e-30 {
        return Ok(SpatialFrame::identity(n, 0.0));
    }
    let mut r = DMatrix::<f64>::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
    r.row_mut(0).neg_mut();
    SpatialFrame::new(r, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_unit_vector, rng_for};

    fn image_error(omega: &[f64]) -> f64 {
        let f = frame_to_pole(omega).unwrap();
        let mut img = f.rotate(omega);
        *img.last_mut().unwrap() -= 1.0;
        norm2(&img).sqrt()
    }

    #[test]
    fn pole_is_fixed() {
        let f = frame_to_pole(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(f.rotation(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn antipode() {
        for n in 2..6 {
            let mut w = vec![0.0; n];
            w[n - 1] = -1.0;
            let f = frame_to_pole(&w).unwrap();
            let mut expect = DMatrix::<f64>::identity(n, n);
            expect[(0, 0)] = -1.0;
            expect[(n - 1, n - 1)] = -1.0;
            assert_eq!(f.rotation(), &expect, "n = {n}");
            assert!((f.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_directions() {
        let mut rng = rng_for(11, 0);
        for n in 2..7 {
            for _ in 0..200 {
                let w = random_unit_vector(&mut rng, n);
                let f = frame_to_pole(&w).unwrap();
                assert!(image_error(&w) <= 1e-12);
                assert!((f.determinant() - 1.0).abs() <= 1e-12);
                assert!(f.orthogonality_error() <= 1e-12);
            }
        }
    }

    #[test]
    fn near_pole_directions() {
        let w = [1e-9, (1.0f64 - 1e-18).sqrt()];
        assert!(image_error(&w) <= 1e-12);
    }

    #[test]
    fn round_trip() {
        let f = frame_to_pole(&[0.6, 0.8]).unwrap().with_time_shift(0.25);
        let (t, xi) = f.to_local(1.0, &[0.3, -0.4]);
        let (s, x) = f.to_world(t, &xi);
        assert!((s - 1.0).abs() < 1e-15);
        assert!((x[0] - 0.3).abs() < 1e-15 && (x[1] + 0.4).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_unit_and_non_orthogonal() {
        assert!(frame_to_pole(&[0.9, 0.0]).is_err());
        assert!(frame_to_pole(&[-1.0]).is_err());
        assert!(SpatialFrame::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]), 0.0).is_err());
    }
}
