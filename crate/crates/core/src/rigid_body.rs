//! Quadrotor rigid-body dynamics on SE(3) and fixed-step integrators that keep
//! the attitude on SO(3).
//!
//! Conventions: `e3` points along gravity, thrust acts along `-b3`, so the
//! translational equation is `m v' = m g e3 - f R e3`.

use crate::error::{Error, Result};
use crate::so3::{hat, Mat3, RotationMatrix, Vec3};

/// Gravitational acceleration used by every preset, m/s^2.
pub const GRAVITY: f64 = 9.81;

/// Physical parameters of the vehicle. The controller only ever sees the
/// nominal inertia `J`; the plant is integrated with the true inertia `J_bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantParams {
    pub m: f64,
    pub g: f64,
    j: Mat3,
    j_inv: Mat3,
    j_bar: Mat3,
    j_bar_inv: Mat3,
}

impl PlantParams {
    pub fn new(m: f64, j: Mat3, j_bar: Mat3, g: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::Validation(format!("mass must be positive, got {m}")));
        }
        if !(g > 0.0) {
            return Err(Error::Validation(format!(
                "gravity must be positive, got {g}"
            )));
        }
        check_spd(&j, "nominal inertia J")?;
        check_spd(&j_bar, "true inertia J_bar")?;
        let j_inv = j.try_inverse().ok_or(Error::SingularInertia)?;
        let j_bar_inv = j_bar.try_inverse().ok_or(Error::SingularInertia)?;
        Ok(Self {
            m,
            g,
            j,
            j_inv,
            j_bar,
            j_bar_inv,
        })
    }

    /// Nominal and true inertia are the same.
    pub fn nominal(m: f64, j: Mat3, g: f64) -> Result<Self> {
        Self::new(m, j, j, g)
    }

    pub fn j(&self) -> &Mat3 {
        &self.j
    }

    pub fn j_inv(&self) -> &Mat3 {
        &self.j_inv
    }

    pub fn j_bar(&self) -> &Mat3 {
        &self.j_bar
    }

    pub fn j_bar_inv(&self) -> &Mat3 {
        &self.j_bar_inv
    }
}

fn check_spd(m: &Mat3, what: &str) -> Result<()> {
    if (m - m.transpose()).norm() > 1e-12 * m.norm().max(1.0) {
        return Err(Error::Validation(format!("{what} is not symmetric")));
    }
    if m.iter().any(|v| !v.is_finite()) || m.cholesky().is_none() {
        return Err(Error::SingularInertia);
    }
    Ok(())
}

/// Inertia contribution of a point mass `m_a` at body position `r`:
/// `-m_a hat(r)^2`.
pub fn added_mass_inertia(m_a: f64, r: &Vec3) -> Result<Mat3> {
    if m_a < 0.0 || m_a.is_nan() {
        return Err(Error::NegativeMass(m_a));
    }
    let h = hat(r);
    Ok(-(h * h) * m_a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyState {
    pub x: Vec3,
    pub v: Vec3,
    pub r: RotationMatrix,
    pub omega: Vec3,
}

impl RigidBodyState {
    pub fn at_rest(r: RotationMatrix) -> Self {
        Self {
            x: Vec3::zeros(),
            v: Vec3::zeros(),
            r,
            omega: Vec3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x
            .iter()
            .chain(self.v.iter())
            .chain(self.omega.iter())
            .all(|c| c.is_finite())
            && self.r.matrix().iter().all(|c| c.is_finite())
    }
}

/// Time derivative of [`RigidBodyState`] on the flat embedding
/// `R^3 x R^3 x R^{3x3} x R^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub x_dot: Vec3,
    pub v_dot: Vec3,
    pub r_dot: Mat3,
    pub omega_dot: Vec3,
}

#[inline]
fn rotational_accel(
    omega: &Vec3,
    moment: &Vec3,
    theta_e: &Vec3,
    inertia: &Mat3,
    inertia_inv: &Mat3,
) -> Vec3 {
    inertia_inv * (moment - omega.cross(&(inertia * omega)) + theta_e)
}

#[inline]
fn translational_accel(r: &Mat3, thrust: f64, p: &PlantParams) -> Vec3 {
    let mut a = r.column(2) * (-thrust / p.m);
    a.z += p.g;
    a
}

/// Right-hand side of the true model:
/// `x' = v`, `m v' = m g e3 - f R e3`, `R' = R hat(Omega)`,
/// `J_bar Omega' = M - Omega x J_bar Omega + theta_e`.
///
/// Invertibility of `J_bar` is checked when [`PlantParams`] is built.
pub fn true_model_derivative(
    s: &RigidBodyState,
    thrust: f64,
    moment: &Vec3,
    theta_e: &Vec3,
    p: &PlantParams,
) -> StateDerivative {
    let r = s.r.matrix();
    StateDerivative {
        x_dot: s.v,
        v_dot: translational_accel(r, thrust, p),
        r_dot: r * hat(&s.omega),
        omega_dot: rotational_accel(&s.omega, moment, theta_e, &p.j_bar, &p.j_bar_inv),
    }
}

/// How the attitude is advanced inside one fixed step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttitudeIntegrator {
    /// Classical RK4 on the 3x3 matrix followed by polar reprojection.
    #[default]
    Rk4Reproject,
    /// Runge-Kutta-Munthe-Kaas RK4: stages live on the group through the
    /// exponential map, so no reprojection is needed.
    LieRk4,
}

/// Nearest rotation to `m` in Frobenius norm (orthogonal polar factor).
///
/// Uses the scaled Newton iteration `X <- (zX + X^{-T}/z)/2`, which converges
/// quadratically to the polar factor for any nonsingular input. Inputs that
/// are already close to orthogonal take the cheaper Newton-Schulz iteration
/// `X <- X (3I - X^T X) / 2`, which has the same fixed point.
pub fn reproject_so3(m: &Mat3) -> Result<RotationMatrix> {
    let gram = m.transpose() * m - Mat3::identity();
    if gram.norm() < 1e-4 && m.determinant() > 0.0 {
        let mut x = *m;
        let mut g = gram;
        for _ in 0..4 {
            x -= x * g * 0.5;
            g = x.transpose() * x - Mat3::identity();
            if g.norm() < 1e-15 {
                break;
            }
        }
        return Ok(RotationMatrix::new_unchecked(x));
    }
    let det = m.determinant();
    let scale = m.norm() / 3f64.sqrt();
    if !det.is_finite() || det <= 1e-12 * scale.powi(3) {
        return Err(Error::DegenerateMatrix(det));
    }
    let mut x = *m;
    for _ in 0..30 {
        let inv_t = match x.try_inverse() {
            Some(inv) => inv.transpose(),
            None => return Err(Error::DegenerateMatrix(det)),
        };
        // Byers-Xu scaling (determinant-based) speeds up the first iterations
        // when far from orthogonal; it is ~1 near convergence.
        let d = x.determinant().abs().powf(1.0 / 3.0);
        let z = 1.0 / d;
        let next = (x * z + inv_t / z) * 0.5;
        let delta = (next - x).norm();
        x = next;
        if delta <= 1e-15 {
            break;
        }
    }
    Ok(RotationMatrix::new_unchecked(x))
}

/// Inverse right Jacobian of SO(3): `xi' = J_r^{-1}(xi) Omega` when
/// `R(t) = R0 exp(hat(xi(t)))`.
fn right_jacobian_inv(xi: &Vec3) -> Mat3 {
    let k = hat(xi);
    Mat3::identity() + k * 0.5 + k * k * jr_inv_coeff(xi.norm_squared())
}

fn jr_inv_coeff(theta2: f64) -> f64 {
    if theta2 < 1e-8 {
        1.0 / 12.0 + theta2 / 720.0
    } else {
        let theta = theta2.sqrt();
        1.0 / theta2 - (1.0 + theta.cos()) / (2.0 * theta * theta.sin())
    }
}

/// One fixed step of the true model with thrust and moment held constant.
///
/// `theta_e(t, R)` is re-evaluated at each stage since it models physics
/// (e.g. a gravity moment of an offset mass), not a sampled input.
#[allow(clippy::too_many_arguments)]
pub fn rk4_step<F>(
    s: &RigidBodyState,
    thrust: f64,
    moment: &Vec3,
    theta_e: F,
    t: f64,
    dt: f64,
    p: &PlantParams,
    integrator: AttitudeIntegrator,
) -> Result<RigidBodyState>
where
    F: Fn(f64, &Mat3) -> Vec3,
{
    debug_assert!(dt != 0.0);
    let jb = &p.j_bar;
    let jbi = &p.j_bar_inv;
    let r0 = *s.r.matrix();
    let h = 0.5 * dt;

    match integrator {
        AttitudeIntegrator::Rk4Reproject => {
            let k1_v = translational_accel(&r0, thrust, p);
            let k1_r = r0 * hat(&s.omega);
            let k1_w = rotational_accel(&s.omega, moment, &theta_e(t, &r0), jb, jbi);

            let v2 = s.v + k1_v * h;
            let r2 = r0 + k1_r * h;
            let w2 = s.omega + k1_w * h;
            let k2_v = translational_accel(&r2, thrust, p);
            let k2_r = r2 * hat(&w2);
            let k2_w = rotational_accel(&w2, moment, &theta_e(t + h, &r2), jb, jbi);

            let v3 = s.v + k2_v * h;
            let r3 = r0 + k2_r * h;
            let w3 = s.omega + k2_w * h;
            let k3_v = translational_accel(&r3, thrust, p);
            let k3_r = r3 * hat(&w3);
            let k3_w = rotational_accel(&w3, moment, &theta_e(t + h, &r3), jb, jbi);

            let v4 = s.v + k3_v * dt;
            let r4 = r0 + k3_r * dt;
            let w4 = s.omega + k3_w * dt;
            let k4_v = translational_accel(&r4, thrust, p);
            let k4_r = r4 * hat(&w4);
            let k4_w = rotational_accel(&w4, moment, &theta_e(t + dt, &r4), jb, jbi);

            let sixth = dt / 6.0;
            let x = s.x + (s.v + v2 * 2.0 + v3 * 2.0 + v4) * sixth;
            let v = s.v + (k1_v + k2_v * 2.0 + k3_v * 2.0 + k4_v) * sixth;
            let r = r0 + (k1_r + k2_r * 2.0 + k3_r * 2.0 + k4_r) * sixth;
            let omega = s.omega + (k1_w + k2_w * 2.0 + k3_w * 2.0 + k4_w) * sixth;
            Ok(RigidBodyState {
                x,
                v,
                r: reproject_so3(&r)?,
                omega,
            })
        }
        AttitudeIntegrator::LieRk4 => {
            let k1_v = translational_accel(&r0, thrust, p);
            let k1_w = rotational_accel(&s.omega, moment, &theta_e(t, &r0), jb, jbi);
            let k1_xi = s.omega;

            let xi2 = k1_xi * h;
            let r2 = r0 * RotationMatrix::exp(&xi2).into_inner();
            let v2 = s.v + k1_v * h;
            let w2 = s.omega + k1_w * h;
            let k2_v = translational_accel(&r2, thrust, p);
            let k2_w = rotational_accel(&w2, moment, &theta_e(t + h, &r2), jb, jbi);
            let k2_xi = right_jacobian_inv(&xi2) * w2;

            let xi3 = k2_xi * h;
            let r3 = r0 * RotationMatrix::exp(&xi3).into_inner();
            let v3 = s.v + k2_v * h;
            let w3 = s.omega + k2_w * h;
            let k3_v = translational_accel(&r3, thrust, p);
            let k3_w = rotational_accel(&w3, moment, &theta_e(t + h, &r3), jb, jbi);
            let k3_xi = right_jacobian_inv(&xi3) * w3;

            let xi4 = k3_xi * dt;
            let r4 = r0 * RotationMatrix::exp(&xi4).into_inner();
            let v4 = s.v + k3_v * dt;
            let w4 = s.omega + k3_w * dt;
            let k4_v = translational_accel(&r4, thrust, p);
            let k4_w = rotational_accel(&w4, moment, &theta_e(t + dt, &r4), jb, jbi);
            let k4_xi = right_jacobian_inv(&xi4) * w4;

            let sixth = dt / 6.0;
            let x = s.x + (s.v + v2 * 2.0 + v3 * 2.0 + v4) * sixth;
            let v = s.v + (k1_v + k2_v * 2.0 + k3_v * 2.0 + k4_v) * sixth;
            let omega = s.omega + (k1_w + k2_w * 2.0 + k3_w * 2.0 + k4_w) * sixth;
            let xi = (k1_xi + k2_xi * 2.0 + k3_xi * 2.0 + k4_xi) * sixth;
            // exp() of a finite vector is orthonormal to rounding; the product
            // is reprojected anyway so drift cannot accumulate over long runs.
            let r = reproject_so3(&(r0 * RotationMatrix::exp(&xi).into_inner()))?;
            Ok(RigidBodyState { x, v, r, omega })
        }
    }
}

/// Rotational-only RK4 step `R' = R hat(Omega)`, `J Omega' = M - Omega x J Omega`
/// with the moment held constant. Used for the disturbance-free reference model.
pub fn rk4_attitude_step(
    r: &RotationMatrix,
    omega: &Vec3,
    moment: &Vec3,
    inertia: &Mat3,
    inertia_inv: &Mat3,
    dt: f64,
) -> Result<(RotationMatrix, Vec3)> {
    let zero = Vec3::zeros();
    let r0 = *r.matrix();
    let h = 0.5 * dt;
    let k1_r = r0 * hat(omega);
    let k1_w = rotational_accel(omega, moment, &zero, inertia, inertia_inv);
    let w2 = omega + k1_w * h;
    let r2 = r0 + k1_r * h;
    let k2_r = r2 * hat(&w2);
    let k2_w = rotational_accel(&w2, moment, &zero, inertia, inertia_inv);
    let w3 = omega + k2_w * h;
    let r3 = r0 + k2_r * h;
    let k3_r = r3 * hat(&w3);
    let k3_w = rotational_accel(&w3, moment, &zero, inertia, inertia_inv);
    let w4 = omega + k3_w * dt;
    let r4 = r0 + k3_r * dt;
    let k4_r = r4 * hat(&w4);
    let k4_w = rotational_accel(&w4, moment, &zero, inertia, inertia_inv);
    let sixth = dt / 6.0;
    let r_next = r0 + (k1_r + k2_r * 2.0 + k3_r * 2.0 + k4_r) * sixth;
    let w_next = omega + (k1_w + k2_w * 2.0 + k3_w * 2.0 + k4_w) * sixth;
    Ok((reproject_so3(&r_next)?, w_next))
}

/// Forward-Euler counterpart of [`rk4_attitude_step`].
pub fn euler_attitude_step(
    r: &RotationMatrix,
    omega: &Vec3,
    moment: &Vec3,
    inertia: &Mat3,
    inertia_inv: &Mat3,
    dt: f64,
) -> Result<(RotationMatrix, Vec3)> {
    let r0 = r.matrix();
    let r_next = r0 + r0 * hat(omega) * dt;
    let w_next = omega + rotational_accel(omega, moment, &Vec3::zeros(), inertia, inertia_inv) * dt;
    Ok((reproject_so3(&r_next)?, w_next))
}
