//! Euler-angle L1 baseline.
//!
//! Same structure as the geometric L1 controller, but errors are ZYX Euler
//! angle differences, rates are compared without transport, and the
//! reference model is integrated in Euler coordinates. The PD terms come
//! from the candidate `V = k |e_eta|^2 / 2 + e_Omega . J e_Omega / 2`, whose
//! derivative `k e_eta . T(eta) e_Omega + ...` is cancelled by feeding back
//! `-k T(eta)^T e_eta`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::controllers::Gains;
use crate::error::{Error, Result};
use crate::l1::{
    adaptation_update, lowpass_step, AdaptationState, L1Params, RefIntegrator, TildeErrors,
};
use crate::rigid_body::RigidBodyState;
use crate::so3::{hat, psi, Mat3, RotationMatrix, Vec3};
use crate::trajectories::AttitudeSetpoint;

/// Pitch margin from +-90 degrees below which the Euler kinematics are refused.
pub const GIMBAL_MARGIN: f64 = 1e-6;

/// ZYX Euler angles `[roll, pitch, yaw]` with `R = Rz(yaw) Ry(pitch) Rx(roll)`.
pub fn euler_zyx(r: &RotationMatrix) -> Vec3 {
    let m = r.matrix();
    let pitch = (-m[(2, 0)]).clamp(-1.0, 1.0).asin();
    let roll = m[(2, 1)].atan2(m[(2, 2)]);
    let yaw = m[(1, 0)].atan2(m[(0, 0)]);
    Vec3::new(roll, pitch, yaw)
}

/// `T(eta)` with `eta' = T(eta) Omega` for body rates `Omega`.
pub fn euler_rate_matrix(eta: &Vec3) -> Result<Mat3> {
    let (sr, cr) = eta.x.sin_cos();
    let pitch = eta.y;
    if !(FRAC_PI_2 - pitch.abs() >= GIMBAL_MARGIN) {
        return Err(Error::GimbalProximity { pitch });
    }
    let (sp, cp) = pitch.sin_cos();
    let tp = sp / cp;
    Ok(Mat3::new(
        1.0,
        sr * tp,
        cr * tp,
        0.0,
        cr,
        -sr,
        0.0,
        sr / cp,
        cr / cp,
    ))
}

fn wrap(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

fn wrap3(v: Vec3) -> Vec3 {
    v.map(wrap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerL1State {
    pub eta_hat: Vec3,
    pub omega_hat: Vec3,
    pub adapt: AdaptationState,
}

impl EulerL1State {
    pub fn new(r_hat: &RotationMatrix, omega_hat: Vec3) -> Self {
        Self {
            eta_hat: euler_zyx(r_hat),
            omega_hat,
            adapt: AdaptationState::default(),
        }
    }

    pub fn r_hat(&self) -> RotationMatrix {
        RotationMatrix::from_euler_zyx(self.eta_hat.x, self.eta_hat.y, self.eta_hat.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerL1Moments {
    pub m: Vec3,
    pub m_hat: Vec3,
    pub mu: Vec3,
    pub theta_filt: Vec3,
    pub filter_state: Vec3,
    pub e_eta_hat: Vec3,
    pub e_omega_hat: Vec3,
    /// Angle and rate errors between reference and true model.
    pub tilde: TildeErrors,
}

fn feedforward(omega: &Vec3, sp: &AttitudeSetpoint, j: &Mat3) -> Vec3 {
    omega.cross(&(j * omega)) - j * (hat(omega) * sp.omega_d - sp.domega_d)
}

/// Moments of the true and reference model for the Euler-angle L1 scheme.
/// Fails with [`Error::GimbalProximity`] near +-90 degrees pitch.
#[allow(clippy::too_many_arguments)]
pub fn euler_l1_moment(
    st: &EulerL1State,
    s: &RigidBodyState,
    sp: &AttitudeSetpoint,
    g: &Gains,
    j: &Mat3,
    params: &L1Params,
    dt: f64,
) -> Result<EulerL1Moments> {
    let (filter_state, theta_filt) =
        lowpass_step(&st.adapt.filter_state, &st.adapt.theta_hat, params.a, dt);
    let eta = euler_zyx(&s.r);
    let eta_d = euler_zyx(&sp.r_d);
    let t_true = euler_rate_matrix(&eta)?;
    let t_hat = euler_rate_matrix(&st.eta_hat)?;

    let e_eta_hat = wrap3(st.eta_hat - eta_d);
    let e_omega_hat = st.omega_hat - sp.omega_d;
    let e_eta_tilde = wrap3(st.eta_hat - eta);
    let e_omega_tilde = st.omega_hat - s.omega;

    let mu_hat_1 = -(t_hat.transpose() * e_eta_hat) * g.k_r_hat - e_omega_hat * g.k_omega_tilde;
    let mu_hat = mu_hat_1 + st.adapt.theta_hat - theta_filt;
    let m_hat = mu_hat + feedforward(&st.omega_hat, sp, j);

    let mu = mu_hat_1 - theta_filt
        + (t_true.transpose() * e_eta_tilde) * g.k_r_tilde
        + e_omega_tilde * g.k_omega_tilde;
    let m = mu + feedforward(&s.omega, sp, j);

    let tilde = TildeErrors {
        e_r: e_eta_tilde,
        e_omega: e_omega_tilde,
        psi: psi(&st.r_hat(), &s.r),
    };
    Ok(EulerL1Moments {
        m,
        m_hat,
        mu,
        theta_filt,
        filter_state,
        e_eta_hat,
        e_omega_hat,
        tilde,
    })
}

fn reference_rhs(
    eta: &Vec3,
    omega: &Vec3,
    m_hat: &Vec3,
    j: &Mat3,
    j_inv: &Mat3,
) -> Result<(Vec3, Vec3)> {
    let t = euler_rate_matrix(eta)?;
    Ok((t * omega, j_inv * (m_hat - omega.cross(&(j * omega)))))
}

/// Integrates the Euler-coordinate reference model and adapts the estimate
/// against the true state at the end of the period.
#[allow(clippy::too_many_arguments)]
pub fn euler_l1_advance(
    st: &EulerL1State,
    mom: &EulerL1Moments,
    s_next: &RigidBodyState,
    g: &Gains,
    j: &Mat3,
    j_inv: &Mat3,
    params: &L1Params,
    dt: f64,
) -> Result<EulerL1State> {
    let (eta0, w0) = (st.eta_hat, st.omega_hat);
    let (eta_hat, omega_hat) = match params.ref_integrator {
        RefIntegrator::Euler => {
            let (de, dw) = reference_rhs(&eta0, &w0, &mom.m_hat, j, j_inv)?;
            (eta0 + de * dt, w0 + dw * dt)
        }
        RefIntegrator::Rk4 => {
            let h = 0.5 * dt;
            let (k1e, k1w) = reference_rhs(&eta0, &w0, &mom.m_hat, j, j_inv)?;
            let (k2e, k2w) =
                reference_rhs(&(eta0 + k1e * h), &(w0 + k1w * h), &mom.m_hat, j, j_inv)?;
            let (k3e, k3w) =
                reference_rhs(&(eta0 + k2e * h), &(w0 + k2w * h), &mom.m_hat, j, j_inv)?;
            let (k4e, k4w) =
                reference_rhs(&(eta0 + k3e * dt), &(w0 + k3w * dt), &mom.m_hat, j, j_inv)?;
            let sixth = dt / 6.0;
            (
                eta0 + (k1e + k2e * 2.0 + k3e * 2.0 + k4e) * sixth,
                w0 + (k1w + k2w * 2.0 + k3w * 2.0 + k4w) * sixth,
            )
        }
    };
    let eta_hat = Vec3::new(wrap(eta_hat.x), eta_hat.y, wrap(eta_hat.z));
    let eta = euler_zyx(&s_next.r);
    let tilde = TildeErrors {
        e_r: wrap3(eta_hat - eta),
        e_omega: omega_hat - s_next.omega,
        psi: 0.0,
    };
    let adapt = AdaptationState {
        theta_hat: st.adapt.theta_hat,
        filter_state: mom.filter_state,
    };
    let adapt = adaptation_update(&adapt, &tilde, &Mat3::identity(), j_inv, g.c, dt, params);
    Ok(EulerL1State {
        eta_hat,
        omega_hat,
        adapt,
    })
}
