//! Geometric L1 adaptive attitude control.
//!
//! A disturbance-free reference model with nominal inertia is driven towards
//! the desired attitude. The true vehicle is driven towards the reference
//! model, and an estimate of the lumped uncertainty, adapted from the
//! mismatch between the two, is injected through a low-pass filter.
//!
//! One control period is split in two phases so the caller can saturate the
//! moment and integrate the plant in between:
//! [`l1_moments`] computes `M` and `M_hat` from the current states, and
//! [`l1_advance`] integrates the reference model and adapts `theta_hat`
//! using the plant state at the end of the period.

use crate::controllers::{moment_feedforward, Gains};
use crate::error::{Error, Result};
use crate::rigid_body::{euler_attitude_step, rk4_attitude_step, RigidBodyState};
use crate::so3::{attitude_errors, hat, psi, skew_vee, Mat3, RotationMatrix, Vec3};
use crate::trajectories::AttitudeSetpoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefIntegrator {
    #[default]
    Rk4,
    Euler,
}

/// Adaptation and filter parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Params {
    gamma: Mat3,
    gamma_inv: Mat3,
    /// Low-pass filter bandwidth `C(s) = a / (s + a)`, rad/s.
    pub a: f64,
    /// Radius of the convex set the estimate is projected onto, N m.
    pub theta_max: f64,
    /// Relative width of the projection boundary layer.
    pub eps_proj: f64,
    pub ref_integrator: RefIntegrator,
}

impl L1Params {
    pub fn new(
        gamma: Mat3,
        a: f64,
        theta_max: f64,
        eps_proj: f64,
        ref_integrator: RefIntegrator,
    ) -> Result<Self> {
        if (gamma - gamma.transpose()).norm() > 1e-12 * gamma.norm() || gamma.cholesky().is_none() {
            return Err(Error::Validation(
                "adaptation gain Gamma must be symmetric positive definite".into(),
            ));
        }
        for (name, v) in [("a", a), ("theta_max", theta_max), ("eps_proj", eps_proj)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!(
                    "L1 parameter {name} must be positive, got {v}"
                )));
            }
        }
        let gamma_inv = gamma
            .try_inverse()
            .ok_or_else(|| Error::Validation("Gamma is singular".into()))?;
        Ok(Self {
            gamma,
            gamma_inv,
            a,
            theta_max,
            eps_proj,
            ref_integrator,
        })
    }

    /// `Gamma = 1e6 I`, `a = 2`, `theta_max = 10`, `eps_proj = 0.1`.
    pub fn defaults() -> Self {
        Self::new(Mat3::identity() * 1e6, 2.0, 10.0, 0.1, RefIntegrator::Rk4)
            .expect("valid defaults")
    }

    pub fn gamma(&self) -> &Mat3 {
        &self.gamma
    }

    pub fn gamma_inv(&self) -> &Mat3 {
        &self.gamma_inv
    }

    /// Hard bound on `|theta_hat|`: the outer edge of the boundary layer.
    pub fn theta_bound(&self) -> f64 {
        self.theta_max * (1.0 + self.eps_proj).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceState {
    pub r_hat: RotationMatrix,
    pub omega_hat: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdaptationState {
    pub theta_hat: Vec3,
    /// Internal state of the per-axis low-pass filter; equals its output.
    pub filter_state: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1State {
    pub reference: ReferenceState,
    pub adapt: AdaptationState,
}

impl L1State {
    pub fn new(r_hat: RotationMatrix, omega_hat: Vec3) -> Self {
        Self {
            reference: ReferenceState { r_hat, omega_hat },
            adapt: AdaptationState::default(),
        }
    }
}

/// Errors between the true model and the reference model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TildeErrors {
    pub e_r: Vec3,
    pub e_omega: Vec3,
    pub psi: f64,
}

/// Reference-model tracking errors `(e_R_hat, e_Omega_hat)`.
pub fn reference_errors(reference: &ReferenceState, sp: &AttitudeSetpoint) -> (Vec3, Vec3) {
    attitude_errors(&reference.r_hat, &reference.omega_hat, &sp.r_d, &sp.omega_d)
}

/// `e_R~ = (R^T R_hat - R_hat^T R)^vee / 2`, `e_Omega~ = Omega_hat - R_hat^T R Omega`,
/// `Psi~ = tr(I - R^T R_hat) / 2`.
pub fn tilde_errors(r: &RotationMatrix, omega: &Vec3, reference: &ReferenceState) -> TildeErrors {
    let rt_rh = r.relative_to(&reference.r_hat);
    TildeErrors {
        e_r: skew_vee(&rt_rh),
        e_omega: reference.omega_hat - rt_rh.transpose() * omega,
        psi: psi(&reference.r_hat, r),
    }
}

/// `P = J R_hat^T R J^{-1} R^T R_hat`.
pub fn p_matrix(r: &RotationMatrix, r_hat: &RotationMatrix, j: &Mat3) -> Result<Mat3> {
    let j_inv = j.try_inverse().ok_or(Error::SingularInertia)?;
    Ok(p_matrix_with(r, r_hat, j, &j_inv))
}

pub fn p_matrix_with(r: &RotationMatrix, r_hat: &RotationMatrix, j: &Mat3, j_inv: &Mat3) -> Mat3 {
    let q = r.relative_to(r_hat);
    j * q.transpose() * j_inv * q
}

/// `theta~ = theta_hat - R_hat^T R theta`.
pub fn theta_tilde(
    theta_hat: &Vec3,
    theta: &Vec3,
    r: &RotationMatrix,
    r_hat: &RotationMatrix,
) -> Vec3 {
    theta_hat - r_hat.relative_to(r) * theta
}

/// Smooth ball constraint `f = (|theta|^2 - theta_max^2) / (eps theta_max^2)`
/// and its gradient. `f <= 0` inside the ball, `f = 1` on the outer edge of
/// the boundary layer.
pub fn projection_function(theta: &Vec3, theta_max: f64, eps: f64) -> (f64, Vec3) {
    let denom = eps * theta_max * theta_max;
    (
        (theta.norm_squared() - theta_max * theta_max) / denom,
        theta * (2.0 / denom),
    )
}

/// Gamma-projection: `Gamma y` in the interior or when `y` points inward,
/// otherwise the outward component is scaled down by `f`, vanishing on the
/// outer edge of the boundary layer.
pub fn proj_gamma(theta_hat: &Vec3, y: &Vec3, params: &L1Params) -> Vec3 {
    let gy = params.gamma * y;
    let (f, grad) = projection_function(theta_hat, params.theta_max, params.eps_proj);
    if f > 0.0 {
        let outward = grad.dot(&gy);
        if outward > 0.0 {
            let g_grad = params.gamma * grad;
            return gy - g_grad * (outward * f / grad.dot(&g_grad));
        }
    }
    gy
}

/// Adaptation input `y = -(P^T e_Omega~ + c P^T J^{-T} e_R~)`.
pub fn adaptation_input(tilde: &TildeErrors, p: &Mat3, j_inv: &Mat3, c: f64) -> Vec3 {
    -(p.transpose() * (tilde.e_omega + j_inv.transpose() * tilde.e_r * c))
}

/// One explicit step `theta_hat += dt Proj(theta_hat, y)`, followed by a
/// radial clip to [`L1Params::theta_bound`] so the discrete update cannot
/// overshoot the boundary layer.
pub fn adaptation_update(
    a: &AdaptationState,
    tilde: &TildeErrors,
    p: &Mat3,
    j_inv: &Mat3,
    c: f64,
    dt: f64,
    params: &L1Params,
) -> AdaptationState {
    let y = adaptation_input(tilde, p, j_inv, c);
    let mut theta_hat = a.theta_hat + proj_gamma(&a.theta_hat, &y, params) * dt;
    let bound = params.theta_bound();
    let n = theta_hat.norm();
    if n > bound {
        theta_hat *= bound / n;
    }
    AdaptationState {
        theta_hat,
        filter_state: a.filter_state,
    }
}

/// Exact zero-order-hold step of `C(s) = a/(s + a)` per axis.
/// Returns `(new_state, output)`; the output equals the new state.
pub fn lowpass_step(state: &Vec3, u: &Vec3, a: f64, dt: f64) -> (Vec3, Vec3) {
    let decay = (-a * dt).exp();
    let next = state * decay + u * (1.0 - decay);
    (next, next)
}

/// Everything computed from the states at the start of a control period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Moments {
    /// Moment for the true vehicle.
    pub m: Vec3,
    /// Moment for the reference model.
    pub m_hat: Vec3,
    /// `M` without the nonlinear feedforward.
    pub mu: Vec3,
    pub mu_hat: Vec3,
    pub theta_filt: Vec3,
    pub filter_state: Vec3,
    pub e_r_hat: Vec3,
    pub e_omega_hat: Vec3,
    pub tilde: TildeErrors,
}

/// Control moments of the true and reference models.
///
/// `mu_hat = -k_R_hat e_R_hat - k_Omega~ e_Omega_hat + P theta_hat - theta_filt`,
/// `mu = J R^T R_hat J^{-1} (mu_hat_1 - theta_filt + k_R~ e_R~ + k_Omega~ e_Omega~)
///      + J R^T R_hat hat(e_Omega~) R_hat^T R e_Omega`,
/// each completed with its own nonlinear feedforward.
#[allow(clippy::too_many_arguments)]
pub fn l1_moments(
    st: &L1State,
    s: &RigidBodyState,
    sp: &AttitudeSetpoint,
    g: &Gains,
    j: &Mat3,
    j_inv: &Mat3,
    params: &L1Params,
    dt: f64,
) -> L1Moments {
    let reference = &st.reference;
    let (filter_state, theta_filt) =
        lowpass_step(&st.adapt.filter_state, &st.adapt.theta_hat, params.a, dt);

    let (e_r_hat, e_omega_hat) = reference_errors(reference, sp);
    let tilde = tilde_errors(&s.r, &s.omega, reference);
    let (_, e_omega) = attitude_errors(&s.r, &s.omega, &sp.r_d, &sp.omega_d);

    let q = s.r.relative_to(&reference.r_hat); // R^T R_hat
    let qt = q.transpose();
    let jq = j * q;
    let p = j * qt * j_inv * q;

    let mu_hat_1 = -e_r_hat * g.k_r_hat - e_omega_hat * g.k_omega_tilde;
    let mu_hat = mu_hat_1 + p * st.adapt.theta_hat - theta_filt;
    let m_hat = mu_hat + moment_feedforward(&reference.r_hat, &reference.omega_hat, sp, j);

    let mu_1 = jq
        * (j_inv
            * (mu_hat_1 - theta_filt + tilde.e_r * g.k_r_tilde + tilde.e_omega * g.k_omega_tilde));
    let mu_2 = jq * (hat(&tilde.e_omega) * (qt * e_omega));
    let mu = mu_1 + mu_2;
    let m = mu + moment_feedforward(&s.r, &s.omega, sp, j);

    L1Moments {
        m,
        m_hat,
        mu,
        mu_hat,
        theta_filt,
        filter_state,
        e_r_hat,
        e_omega_hat,
        tilde,
    }
}

/// Integrates the reference model over one period under `M_hat` and adapts
/// `theta_hat` from the tilde errors between `(r_next, omega_next)` and the
/// advanced reference model.
#[allow(clippy::too_many_arguments)]
pub fn l1_advance(
    st: &L1State,
    mom: &L1Moments,
    r_next: &RotationMatrix,
    omega_next: &Vec3,
    g: &Gains,
    j: &Mat3,
    j_inv: &Mat3,
    params: &L1Params,
    dt: f64,
) -> Result<L1State> {
    let reference = &st.reference;
    let step = match params.ref_integrator {
        RefIntegrator::Rk4 => rk4_attitude_step,
        RefIntegrator::Euler => euler_attitude_step,
    };
    let (r_hat, omega_hat) = step(
        &reference.r_hat,
        &reference.omega_hat,
        &mom.m_hat,
        j,
        j_inv,
        dt,
    )?;
    let reference = ReferenceState { r_hat, omega_hat };
    let tilde = tilde_errors(r_next, omega_next, &reference);
    let p = p_matrix_with(r_next, &r_hat, j, j_inv);
    let adapt = AdaptationState {
        theta_hat: st.adapt.theta_hat,
        filter_state: mom.filter_state,
    };
    let adapt = adaptation_update(&adapt, &tilde, &p, j_inv, g.c, dt, params);
    Ok(L1State { reference, adapt })
}

/// One full period with the true state held fixed: returns `(M, M_hat, next)`.
/// Closed-loop simulations use [`l1_moments`] and [`l1_advance`] around the
/// plant step instead.
pub fn l1_control_step(
    s: &RigidBodyState,
    st: &L1State,
    sp: &AttitudeSetpoint,
    g: &Gains,
    j: &Mat3,
    params: &L1Params,
    dt: f64,
) -> Result<(Vec3, Vec3, L1State)> {
    let j_inv = j.try_inverse().ok_or(Error::SingularInertia)?;
    let mom = l1_moments(st, s, sp, g, j, &j_inv, params, dt);
    let next = l1_advance(st, &mom, &s.r, &s.omega, g, j, &j_inv, params, dt)?;
    Ok((mom.m, mom.m_hat, next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::geometric_pd_moment;
    use approx::assert_abs_diff_eq;

    fn j() -> Mat3 {
        Mat3::from_diagonal(&Vec3::new(6.968e-3, 6.211e-3, 10.34e-3))
    }

    #[test]
    fn reference_and_tilde_examples() {
        let sp = AttitudeSetpoint::fixed(RotationMatrix::identity());
        let th = 0.7;
        let reference = ReferenceState {
            r_hat: RotationMatrix::rot_x(th),
            omega_hat: Vec3::zeros(),
        };
        let (e_r, e_w) = reference_errors(&reference, &sp);
        assert_abs_diff_eq!(e_r, Vec3::new(th.sin(), 0.0, 0.0), epsilon = 1e-15);
        assert_eq!(e_w, Vec3::zeros());

        let r = RotationMatrix::from_euler_zyx(0.2, 0.3, 0.4);
        let w = Vec3::new(1.0, -2.0, 0.5);
        let same = ReferenceState {
            r_hat: r,
            omega_hat: w,
        };
        let t = tilde_errors(&r, &w, &same);
        assert_abs_diff_eq!(t.e_r, Vec3::zeros(), epsilon = 1e-15);
        assert_abs_diff_eq!(t.e_omega, Vec3::zeros(), epsilon = 1e-15);
        assert_abs_diff_eq!(t.psi, 0.0, epsilon = 1e-15);

        let flipped = RotationMatrix::rot_x(178f64.to_radians());
        let id = ReferenceState {
            r_hat: RotationMatrix::identity(),
            omega_hat: Vec3::zeros(),
        };
        let t = tilde_errors(&flipped, &Vec3::zeros(), &id);
        assert_abs_diff_eq!(
            t.psi,
            0.5 * (3.0 - (1.0 + 2.0 * 178f64.to_radians().cos())),
            epsilon = 1e-14
        );
    }

    #[test]
    fn p_matrix_examples() {
        let j = j();
        let r = RotationMatrix::from_euler_zyx(0.2, -0.3, 1.4);
        assert_abs_diff_eq!(
            p_matrix(&r, &r, &j).unwrap(),
            Mat3::identity(),
            epsilon = 1e-13
        );
        let r_hat = RotationMatrix::from_euler_zyx(-1.0, 0.5, 0.1);
        assert_abs_diff_eq!(
            p_matrix(&r, &r_hat, &j).unwrap().determinant(),
            1.0,
            epsilon = 1e-12
        );
        let iso = Mat3::identity() * 0.3;
        assert_abs_diff_eq!(
            p_matrix(&r, &r_hat, &iso).unwrap(),
            Mat3::identity(),
            epsilon = 1e-13
        );
        assert!(matches!(
            p_matrix(&r, &r_hat, &Mat3::zeros()),
            Err(Error::SingularInertia)
        ));
    }

    #[test]
    fn theta_tilde_examples() {
        let r = RotationMatrix::rot_y(0.4);
        let r_hat = RotationMatrix::rot_z(-0.9);
        let theta = Vec3::new(0.3, -0.1, 0.2);
        let transported = r_hat.relative_to(&r) * theta;
        assert_abs_diff_eq!(
            theta_tilde(&transported, &theta, &r, &r_hat),
            Vec3::zeros(),
            epsilon = 1e-15
        );
        let th = Vec3::new(1.0, 2.0, 3.0);
        assert_abs_diff_eq!(
            theta_tilde(&th, &theta, &r, &r),
            th - theta,
            epsilon = 1e-15
        );
    }

    #[test]
    fn projection_interior_and_boundary() {
        let params = L1Params::defaults();
        let y = Vec3::new(1e-6, -2e-6, 3e-6);
        let inside = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(proj_gamma(&inside, &y, &params), params.gamma() * y);

        // On the outer edge of the boundary layer, the outward part of Gamma y
        // is removed entirely: the update is tangent to the sphere.
        let edge = Vec3::new(1.0, 1.0, 0.0).normalize() * params.theta_bound();
        let out = edge.normalize() * 1e-6 + Vec3::new(0.0, 0.0, 1e-6);
        let pr = proj_gamma(&edge, &out, &params);
        assert_abs_diff_eq!(pr.dot(&edge), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(pr.z, 1.0, epsilon = 1e-9);

        // Inward-pointing y is untouched.
        let inward = -out;
        assert_eq!(proj_gamma(&edge, &inward, &params), params.gamma() * inward);
    }

    #[test]
    fn adaptation_stays_bounded() {
        let params = L1Params::defaults();
        let j_inv = j().try_inverse().unwrap();
        let tilde = TildeErrors {
            e_r: Vec3::new(-0.5, 0.2, 0.1),
            e_omega: Vec3::new(-3.0, 1.0, 2.0),
            psi: 0.1,
        };
        let mut a = AdaptationState::default();
        for _ in 0..2000 {
            let prev = a.theta_hat.norm();
            a = adaptation_update(&a, &tilde, &Mat3::identity(), &j_inv, 0.07, 1e-3, &params);
            assert!(a.theta_hat.norm() <= params.theta_max * (1.0 + params.eps_proj));
            if prev >= params.theta_bound() - 1e-12 {
                assert!(a.theta_hat.norm() <= prev + 1e-9);
            }
        }
    }

    #[test]
    fn lowpass_examples() {
        let mut s = Vec3::zeros();
        let u = Vec3::new(1.0, -2.0, 0.5);
        let dt = 1e-3;
        for k in 1..=500 {
            s = lowpass_step(&s, &u, 2.0, dt).0;
            if k == 500 {
                let oracle = 1.0 - (-2.0f64 * 0.5).exp();
                assert_abs_diff_eq!(s.x, oracle, epsilon = 1e-12);
            }
        }
        for _ in 0..100_000 {
            s = lowpass_step(&s, &u, 2.0, dt).0;
        }
        assert_abs_diff_eq!(s, u, epsilon = 1e-9);
    }

    #[test]
    fn moments_reduce_to_pd_when_models_agree() {
        let j = j();
        let j_inv = j.try_inverse().unwrap();
        let g = Gains::defaults(&j).unwrap();
        let params = L1Params::defaults();
        let s = RigidBodyState {
            omega: Vec3::new(0.3, -0.2, 0.8),
            ..RigidBodyState::at_rest(RotationMatrix::from_euler_zyx(0.5, -0.4, 0.2))
        };
        let sp = AttitudeSetpoint {
            r_d: RotationMatrix::rot_z(0.3),
            omega_d: Vec3::new(0.1, 0.0, -0.2),
            domega_d: Vec3::new(0.0, 0.3, 0.1),
        };
        let st = L1State::new(s.r, s.omega);
        let mom = l1_moments(&st, &s, &sp, &g, &j, &j_inv, &params, 1e-3);
        let pd = geometric_pd_moment(
            &s,
            &sp,
            &Gains {
                k_r: g.k_r_hat,
                k_omega: g.k_omega_tilde,
                ..g
            },
            &j,
        );
        assert_abs_diff_eq!(mom.m, pd, epsilon = 1e-13);
        assert_abs_diff_eq!(mom.m_hat, pd, epsilon = 1e-13);
    }

    #[test]
    fn combined_moment_identity() {
        let j = j();
        let j_inv = j.try_inverse().unwrap();
        let g = Gains::defaults(&j).unwrap();
        let params = L1Params::defaults();
        let s = RigidBodyState {
            omega: Vec3::new(1.3, -0.2, 0.8),
            ..RigidBodyState::at_rest(RotationMatrix::from_euler_zyx(2.5, -0.4, 0.2))
        };
        let sp = AttitudeSetpoint {
            r_d: RotationMatrix::rot_z(0.3),
            omega_d: Vec3::new(0.1, 0.0, -0.2),
            domega_d: Vec3::new(0.0, 0.3, 0.1),
        };
        let mut st = L1State::new(
            RotationMatrix::from_euler_zyx(-0.3, 0.9, 1.0),
            Vec3::new(-0.5, 0.4, 0.0),
        );
        st.adapt = AdaptationState {
            theta_hat: Vec3::new(0.4, -0.3, 0.9),
            filter_state: Vec3::new(0.1, 0.2, -0.3),
        };
        let mom = l1_moments(&st, &s, &sp, &g, &j, &j_inv, &params, 1e-3);
        let q = s.r.relative_to(&st.reference.r_hat);
        let (_, e_w) = attitude_errors(&s.r, &s.omega, &sp.r_d, &sp.omega_d);
        let t = &mom.tilde;
        let alt = j * q * j_inv * (mom.mu_hat + t.e_r * g.k_r_tilde + t.e_omega * g.k_omega_tilde)
            - q * st.adapt.theta_hat
            + j * q * hat(&t.e_omega) * q.transpose() * e_w;
        assert!((alt - mom.mu).norm() <= 1e-10 * mom.mu.norm());
    }
}
