//! Baseline controllers: position loop, geometric PD and PID attitude
//! moments, the Euler-angle L1 baseline, and actuator saturation.

pub mod euler;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::rigid_body::RigidBodyState;
use crate::so3::{attitude_errors, hat, Mat3, RotationMatrix, Vec3};
use crate::trajectories::{attitude_from_flat, thrust_vector, AttitudeSetpoint, FlatSample};

pub use euler::{
    euler_l1_advance, euler_l1_moment, euler_rate_matrix, euler_zyx, EulerL1Moments, EulerL1State,
};

/// Controller gains. `k_r_hat` drives the reference model; `k_r_tilde` and
/// `k_omega_tilde` act on the error between true and reference model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub k_x: f64,
    pub k_v: f64,
    pub k_r: f64,
    pub k_omega: f64,
    pub k_r_hat: f64,
    pub k_r_tilde: f64,
    pub k_omega_tilde: f64,
    pub k_i: f64,
    /// Cross-term weight of the Lyapunov function, also used in the
    /// adaptation input.
    pub c: f64,
}

impl Gains {
    /// Published gains with `c` chosen from the inertia.
    pub fn defaults(j: &Mat3) -> Result<Self> {
        let mut g = Self {
            k_x: 4.0,
            k_v: 3.2,
            k_r: 2.0,
            k_omega: 0.25,
            k_r_hat: 2.0,
            k_r_tilde: 2.0,
            k_omega_tilde: 0.25,
            k_i: 0.5,
            c: 0.0,
        };
        g.c = lyapunov_c(g.k_r_tilde, g.k_omega_tilde, j);
        g.validate(j)?;
        Ok(g)
    }

    /// Positivity of every gain and positive definiteness of the Lyapunov
    /// weight matrices.
    pub fn validate(&self, j: &Mat3) -> Result<()> {
        let named = [
            ("k_x", self.k_x),
            ("k_v", self.k_v),
            ("k_R", self.k_r),
            ("k_Omega", self.k_omega),
            ("k_R_hat", self.k_r_hat),
            ("k_R_tilde", self.k_r_tilde),
            ("k_Omega_tilde", self.k_omega_tilde),
            ("c", self.c),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!(
                    "gain {name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.k_i >= 0.0 && self.k_i.is_finite()) {
            return Err(Error::Validation(format!(
                "gain k_I must be non-negative, got {}",
                self.k_i
            )));
        }
        LyapunovWeights::new(self, j, 0.0).map(|_| ())
    }
}

fn sym_eigen_extremes(m: &Mat3) -> (f64, f64) {
    let e = m.symmetric_eigenvalues();
    (e.min(), e.max())
}

/// Largest admissible cross-term constant scaled by 0.9:
/// `0.9 min{k_W, 4 k_W k_R l_m(J^2) / (k_W^2 l_M(J) + 4 k_R l_m(J^2)), sqrt(k_R l_m(J))}`.
pub fn lyapunov_c(k_r: f64, k_omega: f64, j: &Mat3) -> f64 {
    let (lm, lmax) = sym_eigen_extremes(j);
    let (lm2, _) = sym_eigen_extremes(&(j * j));
    let b1 = k_omega;
    let b2 = 4.0 * k_omega * k_r * lm2 / (k_omega * k_omega * lmax + 4.0 * k_r * lm2);
    let b3 = (k_r * lm).sqrt();
    0.9 * b1.min(b2).min(b3)
}

/// The 2x2 weights bounding the Lyapunov function in `eta = [|e_R|, |e_Omega|]`:
/// `V' <= -eta^T W eta`, `eta^T W1 eta <= V1 <= eta^T W2 eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovWeights {
    pub w: Matrix2<f64>,
    pub w1: Matrix2<f64>,
    pub w2: Matrix2<f64>,
    pub lambda_min_j: f64,
    pub lambda_max_j: f64,
}

impl LyapunovWeights {
    /// `psi_bound` is an upper bound on the configuration error over the run,
    /// required to be below 2.
    pub fn new(g: &Gains, j: &Mat3, psi_bound: f64) -> Result<Self> {
        if !(0.0..2.0).contains(&psi_bound) {
            return Err(Error::Validation(format!(
                "psi bound must lie in [0, 2), got {psi_bound}"
            )));
        }
        let (lm, lmax) = sym_eigen_extremes(j);
        let (kr, kw, c) = (g.k_r_tilde, g.k_omega_tilde, g.c);
        let off = -c * kw / (2.0 * lm);
        let w = Matrix2::new(c * kr / lmax, off, off, kw - c);
        let w1 = Matrix2::new(kr, -c, -c, lm) * 0.5;
        let w2 = Matrix2::new(2.0 * kr / (2.0 - psi_bound), c, c, lmax) * 0.5;
        for (which, m) in [("W", &w), ("W1", &w1), ("W2", &w2)] {
            if !is_pd2(m) {
                return Err(Error::IndefiniteW { which, c });
            }
        }
        Ok(Self {
            w,
            w1,
            w2,
            lambda_min_j: lm,
            lambda_max_j: lmax,
        })
    }

    /// `lambda_m(W) / lambda_M(W2)`.
    pub fn beta(&self) -> f64 {
        eig2(&self.w).0 / eig2(&self.w2).1
    }
}

fn is_pd2(m: &Matrix2<f64>) -> bool {
    m[(0, 0)] > 0.0 && m.determinant() > 0.0
}

/// Eigenvalues (min, max) of a symmetric 2x2 matrix.
pub fn eig2(m: &Matrix2<f64>) -> (f64, f64) {
    let (a, b, d) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - r, mean + r)
}

/// Output of the position loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionCommand {
    pub thrust: f64,
    pub force: Vec3,
    pub setpoint: AttitudeSetpoint,
}

/// `F = -k_x e_x - k_v e_v - m g e3 + m a_d`, `f = -F . (R e3)`, and the
/// desired attitude built from `F`.
///
/// `flat` is evaluated at nearby times to differentiate the desired attitude
/// with step `h`.
pub fn position_control<T>(
    s: &RigidBodyState,
    flat: T,
    t: f64,
    h: f64,
    g: &Gains,
    m: f64,
    grav: f64,
) -> Result<PositionCommand>
where
    T: Fn(f64) -> FlatSample,
{
    let now = flat(t);
    let e_x = s.x - now.x_d;
    let e_v = s.v - now.v_d;
    let force = thrust_vector(&now.a_d, &e_x, &e_v, g.k_x, g.k_v, m, grav);
    let setpoint = attitude_from_flat(&flat, t, h, &e_x, &e_v, g.k_x, g.k_v, m, grav)?;
    let thrust = -force.dot(&s.r.axis(2));
    Ok(PositionCommand {
        thrust,
        force,
        setpoint,
    })
}

/// Moment that cancels the rigid-body nonlinearity and the setpoint motion:
/// `Omega x J Omega - J (hat(Omega) R^T R_d Omega_d - R^T R_d dOmega_d)`.
pub fn moment_feedforward(
    r: &RotationMatrix,
    omega: &Vec3,
    sp: &AttitudeSetpoint,
    j: &Mat3,
) -> Vec3 {
    let rt_rd = r.relative_to(&sp.r_d);
    omega.cross(&(j * omega)) - j * (hat(omega) * (rt_rd * sp.omega_d) - rt_rd * sp.domega_d)
}

/// `M = -k_R e_R - k_Omega e_Omega + feedforward`.
pub fn geometric_pd_moment(s: &RigidBodyState, sp: &AttitudeSetpoint, g: &Gains, j: &Mat3) -> Vec3 {
    pd_with(s, sp, g.k_r, g.k_omega, j)
}

fn pd_with(s: &RigidBodyState, sp: &AttitudeSetpoint, k_r: f64, k_omega: f64, j: &Mat3) -> Vec3 {
    let (e_r, e_omega) = attitude_errors(&s.r, &s.omega, &sp.r_d, &sp.omega_d);
    -e_r * k_r - e_omega * k_omega + moment_feedforward(&s.r, &s.omega, sp, j)
}

/// Integral state of the geometric PID controller.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub integral: Vec3,
}

/// PD moment minus `k_I * integral(e_R + c e_Omega)`. The integral is
/// advanced by `dt` and clamped per axis so that `|k_I * integral_i|` never
/// exceeds `integral_limit` (N m).
pub fn geometric_pid_moment(
    s: &RigidBodyState,
    sp: &AttitudeSetpoint,
    g: &Gains,
    j: &Mat3,
    state: PidState,
    dt: f64,
    integral_limit: f64,
) -> (Vec3, PidState) {
    let (e_r, e_omega) = attitude_errors(&s.r, &s.omega, &sp.r_d, &sp.omega_d);
    let mut integral = state.integral + (e_r + e_omega * g.c) * dt;
    if g.k_i > 0.0 && integral_limit.is_finite() {
        let bound = integral_limit / g.k_i;
        integral = integral.map(|v| v.clamp(-bound, bound));
    }
    let m = pd_with(s, sp, g.k_r, g.k_omega, j) - integral * g.k_i;
    (m, PidState { integral })
}

/// Per-axis clamp to `[-limit, limit]`.
pub fn saturate_moment(m: &Vec3, limit: f64) -> Vec3 {
    debug_assert!(limit > 0.0);
    m.map(|v| v.clamp(-limit, limit))
}
