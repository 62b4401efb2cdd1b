//! Desired trajectories in flat outputs and the map from flat outputs to a
//! desired attitude.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::so3::{skew_vee, RotationMatrix, Vec3};

/// Below this net thrust magnitude (N) the desired body z axis is undefined.
pub const EPS_THRUST: f64 = 1e-6;

/// Flat outputs and their derivatives at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatSample {
    pub t: f64,
    pub x_d: Vec3,
    pub v_d: Vec3,
    pub a_d: Vec3,
    pub jerk_d: Vec3,
    pub psi_d: f64,
}

impl FlatSample {
    pub fn hold(t: f64, x_d: Vec3) -> Self {
        Self {
            t,
            x_d,
            v_d: Vec3::zeros(),
            a_d: Vec3::zeros(),
            jerk_d: Vec3::zeros(),
            psi_d: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeSetpoint {
    pub r_d: RotationMatrix,
    pub omega_d: Vec3,
    pub domega_d: Vec3,
}

impl AttitudeSetpoint {
    pub fn fixed(r_d: RotationMatrix) -> Self {
        Self {
            r_d,
            omega_d: Vec3::zeros(),
            domega_d: Vec3::zeros(),
        }
    }
}

/// Circle of radius `rho` about `center` with phase `phi` and its first three
/// time derivatives.
fn circle_from_phase(t: f64, center: Vec3, rho: f64, phi: [f64; 4]) -> FlatSample {
    let [p, p1, p2, p3] = phi;
    let (s, c) = p.sin_cos();
    let radial = Vec3::new(c, s, 0.0);
    let tangent = Vec3::new(-s, c, 0.0);
    FlatSample {
        t,
        x_d: center + radial * rho,
        v_d: tangent * (rho * p1),
        a_d: tangent * (rho * p2) - radial * (rho * p1 * p1),
        jerk_d: tangent * (rho * (p3 - p1 * p1 * p1)) - radial * (3.0 * rho * p1 * p2),
        psi_d: 0.0,
    }
}

/// Constant-rate circle in the horizontal plane through the origin.
pub fn circle_flat(t: f64, rho: f64, omega: f64) -> FlatSample {
    circle_from_phase(t, Vec3::zeros(), rho, [omega * t, omega, 0.0, 0.0])
}

/// Circle whose phase follows a logistic curve, so the speed ramps up from
/// zero, peaks at `t0` and decays back to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidCircle {
    pub rho: f64,
    pub center: Vec3,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub t0: f64,
}

impl Default for SigmoidCircle {
    fn default() -> Self {
        Self {
            rho: 1.0,
            center: Vec3::new(0.0, 0.0, 1.5),
            a: 13.0,
            b: 1.0,
            c: 0.1,
            t0: 80.0,
        }
    }
}

impl SigmoidCircle {
    /// Phase `2 pi a / (b + exp(-c (t - t0)))` and its first three derivatives.
    pub fn phase(&self, t: f64) -> [f64; 4] {
        let k = 2.0 * PI * self.a;
        let (b, c) = (self.b, self.c);
        let e = (-c * (t - self.t0)).exp();
        if !e.is_finite() {
            return [0.0; 4];
        }
        let d = b + e;
        [
            k / d,
            k * c * e / (d * d),
            k * c * c * e * (e - b) / (d * d * d),
            k * c * c * c * e * (e * e - 4.0 * b * e + b * b) / (d * d * d * d),
        ]
    }
}

pub fn sigmoid_circle_flat(t: f64, p: &SigmoidCircle) -> FlatSample {
    circle_from_phase(t, p.center, p.rho, p.phase(t))
}

/// Fixed attitude targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StaticAttitude {
    Hover,
    /// ZYX Euler angles in radians.
    Step {
        roll: f64,
        pitch: f64,
        yaw: f64,
    },
}

pub fn attitude_setpoint_static(kind: StaticAttitude) -> AttitudeSetpoint {
    match kind {
        StaticAttitude::Hover => AttitudeSetpoint::fixed(RotationMatrix::identity()),
        StaticAttitude::Step { roll, pitch, yaw } => {
            AttitudeSetpoint::fixed(RotationMatrix::from_euler_zyx(roll, pitch, yaw))
        }
    }
}

/// Desired thrust vector `F = -k_x e_x - k_v e_v - m g e3 + m a_d`.
pub fn thrust_vector(
    a_d: &Vec3,
    e_x: &Vec3,
    e_v: &Vec3,
    k_x: f64,
    k_v: f64,
    m: f64,
    g: f64,
) -> Vec3 {
    let mut f = -e_x * k_x - e_v * k_v + a_d * m;
    f.z -= m * g;
    f
}

/// `R_d = [b1d, b3d x b1d, b3d]` with `b3d = -F/|F|` and `b1d` the heading
/// direction made orthogonal to `b3d`.
pub fn desired_rotation(f: &Vec3, psi_d: f64) -> Result<RotationMatrix> {
    let n = f.norm();
    if !(n >= EPS_THRUST) {
        return Err(Error::DegenerateThrust(n));
    }
    let b3 = -f / n;
    let (s, c) = psi_d.sin_cos();
    let mut b1 = Vec3::new(c, s, 0.0);
    b1 -= b3 * b3.dot(&b1);
    if b1.norm() < 1e-6 {
        b1 = Vec3::new(-s, c, 0.0);
        b1 -= b3 * b3.dot(&b1);
    }
    b1.normalize_mut();
    let b2 = b3.cross(&b1);
    Ok(RotationMatrix::new_unchecked(
        crate::so3::Mat3::from_columns(&[b1, b2, b3]),
    ))
}

/// Desired attitude along a trajectory with the feedback errors `e_x`, `e_v`
/// frozen at their current values.
///
/// `Omega_d` and `dOmega_d` come from central differences of `R_d` with step
/// `h`: five evaluations at `t`, `t +- h`, `t +- 2h`.
#[allow(clippy::too_many_arguments)]
pub fn attitude_from_flat<F>(
    flat: F,
    t: f64,
    h: f64,
    e_x: &Vec3,
    e_v: &Vec3,
    k_x: f64,
    k_v: f64,
    m: f64,
    g: f64,
) -> Result<AttitudeSetpoint>
where
    F: Fn(f64) -> FlatSample,
{
    let rd_at = |tau: f64| -> Result<RotationMatrix> {
        let s = flat(tau);
        desired_rotation(&thrust_vector(&s.a_d, e_x, e_v, k_x, k_v, m, g), s.psi_d)
    };
    let r0 = rd_at(t)?;
    let rp1 = rd_at(t + h)?;
    let rm1 = rd_at(t - h)?;
    let rp2 = rd_at(t + 2.0 * h)?;
    let rm2 = rd_at(t - 2.0 * h)?;
    let rate = |r: &RotationMatrix, plus: &RotationMatrix, minus: &RotationMatrix| {
        skew_vee(&(r.matrix().transpose() * (plus.matrix() - minus.matrix()))) / (2.0 * h)
    };
    let omega_d = rate(&r0, &rp1, &rm1);
    let omega_p = rate(&rp1, &rp2, &r0);
    let omega_m = rate(&rm1, &r0, &rm2);
    let domega_d = (omega_p - omega_m) / (2.0 * h);
    Ok(AttitudeSetpoint {
        r_d: r0,
        omega_d,
        domega_d,
    })
}

/// Desired trajectory families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trajectory {
    Circle {
        rho: f64,
        omega: f64,
    },
    SigmoidCircle(SigmoidCircle),
    Hover {
        x_d: Vec3,
    },
    /// Attitude-only experiment: position is not regulated and the desired
    /// attitude is fixed.
    Attitude {
        roll: f64,
        pitch: f64,
        yaw: f64,
    },
}

impl Trajectory {
    pub fn flat(&self, t: f64) -> FlatSample {
        match self {
            Trajectory::Circle { rho, omega } => circle_flat(t, *rho, *omega),
            Trajectory::SigmoidCircle(p) => sigmoid_circle_flat(t, p),
            Trajectory::Hover { x_d } => FlatSample::hold(t, *x_d),
            Trajectory::Attitude { .. } => FlatSample::hold(t, Vec3::zeros()),
        }
    }

    pub fn is_attitude_only(&self) -> bool {
        matches!(self, Trajectory::Attitude { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn circle_examples() {
        let s = circle_flat(0.0, 1.0, 2.0);
        assert_abs_diff_eq!(s.x_d, Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(s.v_d, Vec3::new(0.0, 2.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(s.a_d, Vec3::new(-4.0, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(s.jerk_d, Vec3::new(0.0, -8.0, 0.0), epsilon = 1e-15);
        for k in 0..50 {
            let s = circle_flat(0.37 * k as f64, 1.3, 2.0);
            assert_eq!(s.psi_d, 0.0);
            assert_abs_diff_eq!(s.x_d.norm(), 1.3, epsilon = 1e-12);
        }
    }

    fn check_chain(f: impl Fn(f64) -> FlatSample, t: f64, h: f64, tol: f64) {
        let (p, m, s) = (f(t + h), f(t - h), f(t));
        assert!(((p.x_d - m.x_d) / (2.0 * h) - s.v_d).norm() <= tol);
        assert!(((p.v_d - m.v_d) / (2.0 * h) - s.a_d).norm() <= tol);
        assert!(((p.a_d - m.a_d) / (2.0 * h) - s.jerk_d).norm() <= tol);
    }

    #[test]
    fn derivative_chains_match_finite_differences() {
        for t in [0.0, 0.7, 2.3] {
            check_chain(|t| circle_flat(t, 1.0, 2.0), t, 1e-4, 1e-6);
        }
        let p = SigmoidCircle::default();
        for t in [0.0, 60.0, 79.0, 80.0, 95.0, 130.0] {
            check_chain(|t| sigmoid_circle_flat(t, &p), t, 1e-3, 1e-5);
        }
    }

    #[test]
    fn sigmoid_examples() {
        let p = SigmoidCircle::default();
        assert_abs_diff_eq!(p.phase(80.0)[0], 13.0 * PI, epsilon = 1e-12);
        let early = p.phase(-1e4);
        assert!(early[1].abs() < 1e-12);
        // Peak speed rho * k c / (4 b).
        let peak = sigmoid_circle_flat(80.0, &p).v_d.norm();
        assert_abs_diff_eq!(peak, 2.0 * PI * 13.0 * 0.1 / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn static_setpoints() {
        let h = attitude_setpoint_static(StaticAttitude::Hover);
        assert_eq!(*h.r_d.matrix(), *RotationMatrix::identity().matrix());
        assert_eq!(h.omega_d, Vec3::zeros());
        let a = 30f64.to_radians();
        let s = attitude_setpoint_static(StaticAttitude::Step {
            roll: a,
            pitch: a,
            yaw: a,
        });
        let oracle = RotationMatrix::rot_z(a) * RotationMatrix::rot_y(a) * RotationMatrix::rot_x(a);
        assert_abs_diff_eq!(*s.r_d.matrix(), *oracle.matrix(), epsilon = 1e-15);
    }

    #[test]
    fn hover_gives_identity() {
        let flat = |t| FlatSample::hold(t, Vec3::new(0.0, -1.0, 1.0));
        let z = Vec3::zeros();
        let sp = attitude_from_flat(flat, 0.0, 1e-3, &z, &z, 4.0, 3.2, 1.129, 9.81).unwrap();
        assert_abs_diff_eq!(
            *sp.r_d.matrix(),
            *RotationMatrix::identity().matrix(),
            epsilon = 1e-15
        );
        assert_eq!(sp.omega_d, Vec3::zeros());
        assert_eq!(sp.domega_d, Vec3::zeros());
    }

    #[test]
    fn degenerate_thrust() {
        // Free-fall acceleration cancels gravity.
        let flat = |t| FlatSample {
            a_d: Vec3::new(0.0, 0.0, 9.81),
            ..FlatSample::hold(t, Vec3::zeros())
        };
        let z = Vec3::zeros();
        let r = attitude_from_flat(flat, 0.0, 1e-3, &z, &z, 4.0, 3.2, 1.0, 9.81);
        assert!(matches!(r, Err(Error::DegenerateThrust(_))));
    }

    #[test]
    fn heading_fallback_when_thrust_is_horizontal() {
        let r = desired_rotation(&Vec3::new(-1.0, 0.0, 0.0), 0.0).unwrap();
        assert!(RotationMatrix::new(*r.matrix()).is_ok());
        assert_abs_diff_eq!(r.axis(2), Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn circle_setpoint_is_periodic_and_consistent() {
        let z = Vec3::zeros();
        let h = 1e-4;
        let sp = |t| {
            attitude_from_flat(
                |s| circle_flat(s, 1.0, 2.0),
                t,
                h,
                &z,
                &z,
                4.0,
                3.2,
                1.129,
                9.81,
            )
            .unwrap()
        };
        for t in [0.1, 0.9, 1.7] {
            let a = sp(t);
            let b = sp(t + PI);
            assert!(a.omega_d.iter().all(|v| v.is_finite()));
            assert_abs_diff_eq!(a.omega_d, b.omega_d, epsilon = 1e-6);
            assert_abs_diff_eq!(a.domega_d, b.domega_d, epsilon = 1e-4);
            // Columns orthonormal with det +1.
            assert!(RotationMatrix::new(*a.r_d.matrix()).is_ok());
            assert_abs_diff_eq!(a.r_d.axis(2).norm(), 1.0, epsilon = 1e-14);
            // Independent rate check from a larger stencil.
            let big = 1e-3;
            let rp = sp(t + big).r_d;
            let rm = sp(t - big).r_d;
            let w =
                skew_vee(&(a.r_d.matrix().transpose() * (rp.matrix() - rm.matrix()))) / (2.0 * big);
            assert_abs_diff_eq!(w, a.omega_d, epsilon = 1e-5);
        }
    }
}
