//! Attitude primitives on SO(3).
//!
//! Vectors and matrices are plain `nalgebra` fixed-size types; only rotations
//! get a newtype, since most of the controller algebra depends on the
//! orthonormality invariant holding.

use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on `|R^T R - I|_F` and `|det R - 1|` accepted at construction.
pub const ROTATION_TOL: f64 = 1e-9;

/// Tolerance on the symmetric part accepted by [`vee`].
pub const SKEW_TOL: f64 = 1e-9;

/// A 3x3 orthonormal matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    /// Validates `m` against [`ROTATION_TOL`].
    pub fn new(m: Mat3) -> Result<Self> {
        let orthogonality = (m.transpose() * m - Mat3::identity()).norm();
        let det = m.determinant();
        if !orthogonality.is_finite()
            || orthogonality > ROTATION_TOL
            || (det - 1.0).abs() > ROTATION_TOL
        {
            return Err(Error::NotARotation { orthogonality, det });
        }
        Ok(Self(m))
    }

    /// Wraps `m` without checking. Callers must guarantee the invariant
    /// (e.g. the matrix came out of a polar reprojection).
    pub(crate) fn new_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Rotation by `angle` about the first axis.
    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    pub fn rot_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// `Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn from_euler_zyx(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self::rot_z(yaw) * Self::rot_y(pitch) * Self::rot_x(roll)
    }

    /// Matrix exponential of `hat(w)` (Rodrigues' formula).
    pub fn exp(w: &Vec3) -> Self {
        let theta2 = w.norm_squared();
        let k = hat(w);
        let (a, b) = if theta2 < 1e-12 {
            // Taylor expansions of sin(t)/t and (1 - cos t)/t^2.
            (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
        } else {
            let theta = theta2.sqrt();
            (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
        };
        Self(Mat3::identity() + k * a + k * k * b)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_inner(self) -> Mat3 {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Column `i` of the matrix (the body axis `b_{i+1}` in the inertial frame).
    pub fn axis(&self, i: usize) -> Vec3 {
        self.0.column(i).into_owned()
    }

    /// `R^T R_other`, the relative rotation from `self` to `other`.
    pub fn relative_to(&self, other: &RotationMatrix) -> Mat3 {
        self.0.transpose() * other.0
    }
}

impl Default for RotationMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for &RotationMatrix {
    type Output = Vec3;

    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

/// The cross-product matrix: `hat(v) * w == v.cross(&w)`.
#[inline]
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. Rejects matrices whose symmetric part exceeds
/// [`SKEW_TOL`] in Frobenius norm.
pub fn vee(m: &Mat3) -> Result<Vec3> {
    let sym = ((m + m.transpose()) * 0.5).norm();
    if !(sym <= SKEW_TOL) {
        return Err(Error::NonSkewInput(sym));
    }
    Ok(skew_vee(m))
}

/// `vee` of the skew-symmetric part, `(m - m^T)^vee / 2`. Used internally
/// where the argument is skew by construction.
#[inline]
pub fn skew_vee(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Configuration error `0.5 * tr(I - R_d^T R)`, in `[0, 2]`.
pub fn psi(r: &RotationMatrix, r_d: &RotationMatrix) -> f64 {
    let tr = r_d.relative_to(r).trace();
    (0.5 * (3.0 - tr)).clamp(0.0, 2.0)
}

/// `C(Q) = 0.5 * (tr(Q^T) I - Q^T)`; the map from angular-velocity error to
/// attitude-error rate.
pub fn c_matrix(q: &Mat3) -> Mat3 {
    let qt = q.transpose();
    (Mat3::identity() * qt.trace() - qt) * 0.5
}

/// Attitude and angular-velocity tracking errors of `(R, Omega)` against
/// `(R_d, Omega_d)`:
///
/// `e_R = 0.5 (R_d^T R - R^T R_d)^vee`, `e_Omega = Omega - R^T R_d Omega_d`.
///
/// Well defined at the antipodal configuration, where `e_R` vanishes.
pub fn attitude_errors(
    r: &RotationMatrix,
    omega: &Vec3,
    r_d: &RotationMatrix,
    omega_d: &Vec3,
) -> (Vec3, Vec3) {
    let rd_t_r = r_d.relative_to(r);
    let e_r = skew_vee(&rd_t_r);
    let e_omega = omega - rd_t_r.transpose() * omega_d;
    (e_r, e_omega)
}
