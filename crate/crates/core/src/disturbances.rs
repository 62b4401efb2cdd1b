//! External disturbance moments and the ground-truth lumped uncertainty.

use crate::error::{Error, Result};
use crate::rigid_body::PlantParams;
use crate::so3::{hat, Mat3, RotationMatrix, Vec3};
use crate::trajectories::AttitudeSetpoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Disturbance {
    /// Body-frame moment held constant, N m.
    Constant(Vec3),
    /// Scalar multi-tone signal multiplied per axis by `scale`.
    Harmonic { scale: Vec3 },
    /// Gravity moment of a point mass `m_a` at body position `r`.
    AddedMass { m_a: f64, r: Vec3 },
}

/// Sum of disturbance components.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisturbanceSpec {
    pub components: Vec<Disturbance>,
}

impl DisturbanceSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(components: Vec<Disturbance>) -> Result<Self> {
        for c in &components {
            if let Disturbance::AddedMass { m_a, .. } = c {
                if *m_a < 0.0 || m_a.is_nan() {
                    return Err(Error::NegativeMass(*m_a));
                }
            }
        }
        Ok(Self { components })
    }

    /// Disturbance moment at time `t` for the body attitude matrix `r`. Takes
    /// a raw matrix so it can be evaluated at intermediate integrator stages.
    pub fn eval(&self, t: f64, r: &Mat3, g: f64) -> Vec3 {
        let mut total = Vec3::zeros();
        for c in &self.components {
            total += match c {
                Disturbance::Constant(v) => *v,
                Disturbance::Harmonic { scale } => scale * harmonic_signal(t),
                Disturbance::AddedMass { m_a, r: arm } => {
                    // R^T e3 is the third row of R.
                    let down = Vec3::new(r[(2, 0)], r[(2, 1)], r[(2, 2)]);
                    arm.cross(&down) * (m_a * g)
                }
            };
        }
        total
    }
}

/// `0.5 (cos t + 0.5 cos(3t + 0.23) + 0.5 cos(5t - 0.4) + 0.5 cos(7t + 2.09))`.
pub fn harmonic_signal(t: f64) -> f64 {
    0.5 * (t.cos()
        + 0.5 * (3.0 * t + 0.23).cos()
        + 0.5 * (5.0 * t - 0.4).cos()
        + 0.5 * (7.0 * t + 2.09).cos())
}

pub fn theta_e_eval(spec: &DisturbanceSpec, t: f64, r: &RotationMatrix, g: f64) -> Vec3 {
    spec.eval(t, r.matrix(), g)
}

/// Lumped matched uncertainty seen through the nominal model:
///
/// `theta = dJ mu + J J_bar^{-1} (theta_m + theta_e)`, `dJ = J J_bar^{-1} - I`,
/// `theta_m = -Omega x (J_bar - J) Omega + (J_bar - J)(hat(Omega) R^T R_d Omega_d - R^T R_d dOmega_d)`.
///
/// With this `theta` the closed loop obeys `J e_Omega' = mu + theta`.
#[allow(clippy::too_many_arguments)]
pub fn theta_truth(
    mu: &Vec3,
    r: &RotationMatrix,
    omega: &Vec3,
    sp: &AttitudeSetpoint,
    j: &Mat3,
    j_bar: &Mat3,
    theta_e: &Vec3,
) -> Result<Vec3> {
    let j_bar_inv = j_bar.try_inverse().ok_or(Error::SingularInertia)?;
    Ok(theta_truth_inner(
        mu, r, omega, sp, j, j_bar, &j_bar_inv, theta_e,
    ))
}

/// [`theta_truth`] with the inverse inertia taken from validated parameters.
pub fn theta_truth_plant(
    mu: &Vec3,
    r: &RotationMatrix,
    omega: &Vec3,
    sp: &AttitudeSetpoint,
    p: &PlantParams,
    theta_e: &Vec3,
) -> Vec3 {
    theta_truth_inner(mu, r, omega, sp, p.j(), p.j_bar(), p.j_bar_inv(), theta_e)
}

#[allow(clippy::too_many_arguments)]
fn theta_truth_inner(
    mu: &Vec3,
    r: &RotationMatrix,
    omega: &Vec3,
    sp: &AttitudeSetpoint,
    j: &Mat3,
    j_bar: &Mat3,
    j_bar_inv: &Mat3,
    theta_e: &Vec3,
) -> Vec3 {
    let a = j * j_bar_inv;
    let dj = j_bar - j;
    let rt_rd = r.relative_to(&sp.r_d);
    let ff = hat(omega) * (rt_rd * sp.omega_d) - rt_rd * sp.domega_d;
    let theta_m = -omega.cross(&(dj * omega)) + dj * ff;
    (a - Mat3::identity()) * mu + a * (theta_m + theta_e)
}
