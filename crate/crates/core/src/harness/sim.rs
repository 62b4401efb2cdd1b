//! Fixed-step closed-loop simulation of one scenario.

use crate::controllers::{
    euler_l1_advance, euler_l1_moment, geometric_pd_moment, geometric_pid_moment,
    moment_feedforward, position_control, saturate_moment, EulerL1State, Gains, PidState,
};
use crate::disturbances::theta_truth_plant;
use crate::error::{Error, Result};
use crate::harness::log::{LogRecord, RunStatus, SimLog};
use crate::harness::lyapunov::{
    lyapunov_value, lyapunov_value_tracking, BoundTracker, LyapunovSummary,
};
use crate::harness::scenario::{ControllerKind, ScenarioConfig};
use crate::l1::{l1_advance, l1_moments, tilde_errors, L1State, TildeErrors};
use crate::rigid_body::{rk4_step, PlantParams, RigidBodyState};
use crate::so3::{attitude_errors, psi, Mat3, RotationMatrix, Vec3};
use crate::trajectories::{attitude_setpoint_static, AttitudeSetpoint, StaticAttitude, Trajectory};

/// States beyond this norm are treated as diverged.
pub const DIVERGENCE_NORM: f64 = 1e8;

enum CtrlState {
    Pd,
    Pid(PidState),
    L1(L1State),
    Euler(EulerL1State),
}

/// Per-step controller output shared by all controller kinds.
struct CtrlOut {
    m: Vec3,
    m_hat: Vec3,
    theta_hat: Vec3,
    theta_filt: Vec3,
    psi_hat: f64,
    e_omega_hat: f64,
    /// Errors between true and reference model (zero without a reference).
    tilde: TildeErrors,
    r_hat: RotationMatrix,
}

fn initial_state(cfg: &ScenarioConfig) -> RigidBodyState {
    let r = cfg.init.rotation();
    if cfg.trajectory.is_attitude_only() {
        return RigidBodyState {
            omega: cfg.init.omega,
            ..RigidBodyState::at_rest(r)
        };
    }
    let flat = cfg.trajectory.flat(0.0);
    RigidBodyState {
        x: flat.x_d,
        v: flat.v_d,
        r,
        omega: cfg.init.omega,
    }
}

fn static_setpoint(cfg: &ScenarioConfig) -> Option<AttitudeSetpoint> {
    match cfg.trajectory {
        Trajectory::Attitude { roll, pitch, yaw } => {
            Some(attitude_setpoint_static(StaticAttitude::Step {
                roll,
                pitch,
                yaw,
            }))
        }
        _ => None,
    }
}

/// Thrust, attitude setpoint and desired position at time `t`. Attitude-only
/// scenarios hold thrust at `m g` and reuse the precomputed setpoint.
fn setpoint(
    cfg: &ScenarioConfig,
    fixed: Option<&AttitudeSetpoint>,
    s: &RigidBodyState,
    t: f64,
    p: &PlantParams,
) -> Result<(f64, AttitudeSetpoint, Vec3)> {
    match (fixed, cfg.trajectory) {
        (Some(sp), _) => Ok((p.m * p.g, *sp, Vec3::zeros())),
        (None, traj) => {
            let cmd = position_control(s, |tau| traj.flat(tau), t, cfg.dt, &cfg.gains, p.m, p.g)?;
            Ok((cmd.thrust, cmd.setpoint, traj.flat(t).x_d))
        }
    }
}

/// Refuses initial conditions outside the region where the attitude
/// controllers are proven to converge, unless overridden.
pub fn check_gate(cfg: &ScenarioConfig) -> Result<()> {
    if cfg.gate_override {
        return Ok(());
    }
    let p = cfg.plant()?;
    let s = initial_state(cfg);
    let (_, sp, _) = setpoint(cfg, static_setpoint(cfg).as_ref(), &s, 0.0, &p)?;
    let lm = cfg.j.symmetric_eigenvalues().min();
    let (label, psi0, w2, k) = if cfg.controller.is_l1() {
        let reference = crate::l1::ReferenceState {
            r_hat: cfg.init.ref_rotation(),
            omega_hat: cfg.init.ref_omega,
        };
        let t = tilde_errors(&s.r, &s.omega, &reference);
        (
            "reference/true",
            t.psi,
            t.e_omega.norm_squared(),
            cfg.gains.k_r_tilde,
        )
    } else {
        let (_, e_w) = attitude_errors(&s.r, &s.omega, &sp.r_d, &sp.omega_d);
        (
            "desired/true",
            psi(&s.r, &sp.r_d),
            e_w.norm_squared(),
            cfg.gains.k_r,
        )
    };
    if !(psi0 < 2.0) {
        return Err(Error::GateViolation(format!(
            "{label} configuration error {psi0} is not below 2"
        )));
    }
    let bound = 2.0 / lm * k * (2.0 - psi0);
    if !(w2 < bound) {
        return Err(Error::GateViolation(format!(
            "{label} rate error squared {w2:.6} exceeds 2 k_R (2 - Psi) / lambda_m(J) = {bound:.6}"
        )));
    }
    Ok(())
}

fn diverged_reason(s: &RigidBodyState, theta_hat: &Vec3) -> Option<String> {
    if !s.is_finite() || !theta_hat.iter().all(|v| v.is_finite()) {
        return Some("non-finite state".into());
    }
    let big = s.x.norm().max(s.v.norm()).max(s.omega.norm());
    if big > DIVERGENCE_NORM {
        return Some(format!(
            "state norm {big:.3e} exceeds {DIVERGENCE_NORM:.0e}"
        ));
    }
    None
}

fn zero_tilde() -> TildeErrors {
    TildeErrors {
        e_r: Vec3::zeros(),
        e_omega: Vec3::zeros(),
        psi: 0.0,
    }
}

#[allow(clippy::too_many_arguments)]
fn controller_output(
    state: &CtrlState,
    s: &RigidBodyState,
    sp: &AttitudeSetpoint,
    g: &Gains,
    cfg: &ScenarioConfig,
    p: &PlantParams,
    integral_limit: f64,
) -> Result<(CtrlOut, Option<CtrlNext>)> {
    let j = p.j();
    let dt = cfg.dt;
    Ok(match state {
        CtrlState::Pd => (plain(geometric_pd_moment(s, sp, g, j), s), None),
        CtrlState::Pid(pid) => {
            let (m, next) = geometric_pid_moment(s, sp, g, j, *pid, dt, integral_limit);
            (plain(m, s), Some(CtrlNext::Pid(next)))
        }
        CtrlState::L1(st) => {
            let mom = l1_moments(st, s, sp, g, j, p.j_inv(), &cfg.l1, dt);
            let out = CtrlOut {
                m: mom.m,
                m_hat: mom.m_hat,
                theta_hat: st.adapt.theta_hat,
                theta_filt: mom.theta_filt,
                psi_hat: psi(&st.reference.r_hat, &sp.r_d),
                e_omega_hat: mom.e_omega_hat.norm(),
                tilde: mom.tilde,
                r_hat: st.reference.r_hat,
            };
            (out, Some(CtrlNext::L1(Box::new(mom))))
        }
        CtrlState::Euler(st) => {
            let mom = euler_l1_moment(st, s, sp, g, j, &cfg.l1, dt)?;
            let r_hat = st.r_hat();
            let reference = crate::l1::ReferenceState {
                r_hat,
                omega_hat: st.omega_hat,
            };
            let out = CtrlOut {
                m: mom.m,
                m_hat: mom.m_hat,
                theta_hat: st.adapt.theta_hat,
                theta_filt: mom.theta_filt,
                psi_hat: psi(&r_hat, &sp.r_d),
                e_omega_hat: mom.e_omega_hat.norm(),
                tilde: tilde_errors(&s.r, &s.omega, &reference),
                r_hat,
            };
            (out, Some(CtrlNext::Euler(Box::new(mom))))
        }
    })
}

enum CtrlNext {
    Pid(PidState),
    L1(Box<crate::l1::L1Moments>),
    Euler(Box<crate::controllers::EulerL1Moments>),
}

fn plain(m: Vec3, s: &RigidBodyState) -> CtrlOut {
    CtrlOut {
        m,
        m_hat: Vec3::zeros(),
        theta_hat: Vec3::zeros(),
        theta_filt: Vec3::zeros(),
        psi_hat: 0.0,
        e_omega_hat: 0.0,
        tilde: zero_tilde(),
        r_hat: s.r,
    }
}

/// Runs a scenario to completion or divergence.
///
/// Returns an error only for invalid configurations or refused initial
/// conditions; numerical failures during the run end it early with
/// [`RunStatus::Diverged`] and keep the partial log.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimLog> {
    cfg.validate()?;
    check_gate(cfg)?;
    let p = cfg.plant()?;
    let dist = cfg.full_disturbance();
    let g = cfg.gains;
    let j: Mat3 = *p.j();
    let gamma_inv = *cfg.l1.gamma_inv();
    let n = cfg.n_steps();
    let log_every = cfg.log_every();
    let dt = cfg.dt;
    let integral_limit = cfg.saturation.unwrap_or(f64::INFINITY);

    let fixed_sp = static_setpoint(cfg);
    let mut s = initial_state(cfg);
    let mut ctrl = match cfg.controller {
        ControllerKind::GeoPd => CtrlState::Pd,
        ControllerKind::GeoPid => CtrlState::Pid(PidState::default()),
        ControllerKind::GeoL1 => {
            CtrlState::L1(L1State::new(cfg.init.ref_rotation(), cfg.init.ref_omega))
        }
        ControllerKind::EulerL1 => CtrlState::Euler(EulerL1State::new(
            &cfg.init.ref_rotation(),
            cfg.init.ref_omega,
        )),
    };

    let mut records = Vec::with_capacity(n / log_every + 2);
    let mut v_series = Vec::with_capacity(if cfg.diagnostics { n + 1 } else { 0 });
    let mut bounds = BoundTracker::default();
    let mut status = RunStatus::Completed;

    for k in 0..=n {
        let t = k as f64 * dt;
        let step = (|| -> Result<_> {
            let (thrust, sp, x_d) = setpoint(cfg, fixed_sp.as_ref(), &s, t, &p)?;
            let (out, next) = controller_output(&ctrl, &s, &sp, &g, cfg, &p, integral_limit)?;
            Ok((thrust, sp, x_d, out, next))
        })();
        let (thrust, sp, x_d, out, next) = match step {
            Ok(v) => v,
            Err(e) => {
                status = RunStatus::Diverged {
                    t,
                    reason: e.to_string(),
                };
                break;
            }
        };
        let m = match cfg.saturation {
            Some(limit) => saturate_moment(&out.m, limit),
            None => out.m,
        };
        let logging = k % log_every == 0 || k == n;
        if cfg.diagnostics || logging {
            let mu_applied = m - moment_feedforward(&s.r, &s.omega, &sp, &j);
            let theta_e = dist.eval(t, s.r.matrix(), p.g);
            let theta = theta_truth_plant(&mu_applied, &s.r, &s.omega, &sp, &p, &theta_e);
            let (e_r, e_omega) = attitude_errors(&s.r, &s.omega, &sp.r_d, &sp.omega_d);
            let psi_now = psi(&s.r, &sp.r_d);
            let v;
            if cfg.controller.is_l1() {
                let theta_tilde = out.theta_hat - out.r_hat.relative_to(&s.r) * theta;
                v = lyapunov_value(&out.tilde, &theta_tilde, &j, &g, &gamma_inv);
                if cfg.diagnostics {
                    bounds.observe(
                        &theta_tilde,
                        &theta,
                        out.tilde.e_omega.norm(),
                        out.tilde.psi,
                        dt,
                    );
                }
            } else {
                v = lyapunov_value_tracking(&e_r, &e_omega, psi_now, &j, &g);
                if cfg.diagnostics {
                    bounds.psi_max = bounds.psi_max.max(psi_now);
                }
            }
            if cfg.diagnostics {
                v_series.push(v);
            }
            if logging {
                records.push(LogRecord {
                    t,
                    x: s.x,
                    x_d,
                    psi: psi_now,
                    psi_hat: out.psi_hat,
                    psi_tilde: out.tilde.psi,
                    e_omega: e_omega.norm(),
                    e_omega_hat: out.e_omega_hat,
                    e_omega_tilde: out.tilde.e_omega.norm(),
                    theta,
                    theta_hat: out.theta_hat,
                    theta_filt: out.theta_filt,
                    m,
                    m_hat: out.m_hat,
                    f: thrust,
                    v,
                    beta_delta_v: 0.0,
                });
            }
        }
        if k == n {
            break;
        }

        let advanced = (|| -> Result<_> {
            let s_next = rk4_step(
                &s,
                thrust,
                &m,
                |tau, r| dist.eval(tau, r, p.g),
                t,
                dt,
                &p,
                cfg.integrator,
            )?;
            let ctrl_next = match (&ctrl, next) {
                (CtrlState::Pd, _) => CtrlState::Pd,
                (CtrlState::Pid(_), Some(CtrlNext::Pid(pid))) => CtrlState::Pid(pid),
                (CtrlState::L1(st), Some(CtrlNext::L1(mom))) => CtrlState::L1(l1_advance(
                    st,
                    &mom,
                    &s_next.r,
                    &s_next.omega,
                    &g,
                    &j,
                    p.j_inv(),
                    &cfg.l1,
                    dt,
                )?),
                (CtrlState::Euler(st), Some(CtrlNext::Euler(mom))) => CtrlState::Euler(
                    euler_l1_advance(st, &mom, &s_next, &g, &j, p.j_inv(), &cfg.l1, dt)?,
                ),
                _ => unreachable!("controller state and output kinds always match"),
            };
            Ok((s_next, ctrl_next))
        })();
        match advanced {
            Ok((s_next, ctrl_next)) => {
                s = s_next;
                ctrl = ctrl_next;
            }
            Err(e) => {
                status = RunStatus::Diverged {
                    t: t + dt,
                    reason: e.to_string(),
                };
                break;
            }
        }
        let theta_hat = match &ctrl {
            CtrlState::L1(st) => st.adapt.theta_hat,
            CtrlState::Euler(st) => st.adapt.theta_hat,
            _ => Vec3::zeros(),
        };
        if let Some(reason) = diverged_reason(&s, &theta_hat) {
            status = RunStatus::Diverged { t: t + dt, reason };
            break;
        }
    }

    let lyapunov = if cfg.diagnostics {
        let gains = if cfg.controller.is_l1() {
            g
        } else {
            Gains {
                k_r_tilde: g.k_r,
                k_omega_tilde: g.k_omega,
                ..g
            }
        };
        let summary = LyapunovSummary::from_bounds(bounds, &gains, &j, &gamma_inv)?;
        let summary = if cfg.controller.is_l1() {
            summary
        } else {
            LyapunovSummary {
                delta_v: 0.0,
                ..summary
            }
        };
        let bd = summary.beta * summary.delta_v;
        for r in &mut records {
            r.beta_delta_v = bd;
        }
        Some(summary)
    } else {
        None
    };

    let log = SimLog {
        controller: cfg.controller,
        dt,
        records,
        status,
        v_series,
        lyapunov,
    };
    if let Some(path) = &cfg.output {
        log.save_csv(path)?;
    }
    Ok(log)
}
