//! Lyapunov function along simulated trajectories and the ultimate-bound
//! diagnostics `V' + beta V <= beta delta_V`.
//!
//! The bounds entering `delta_V` are not known a priori; they are taken as
//! the largest values observed over the run.

use crate::controllers::{Gains, LyapunovWeights};
use crate::error::Result;
use crate::l1::TildeErrors;
use crate::so3::{Mat3, Vec3};

/// `V = e_Omega~ . J e_Omega~ / 2 + k_R~ Psi~ + c e_R~ . e_Omega~ + theta~^T Gamma^{-1} theta~ / 2`.
pub fn lyapunov_value(
    tilde: &TildeErrors,
    theta_tilde: &Vec3,
    j: &Mat3,
    g: &Gains,
    gamma_inv: &Mat3,
) -> f64 {
    0.5 * tilde.e_omega.dot(&(j * tilde.e_omega))
        + g.k_r_tilde * tilde.psi
        + g.c * tilde.e_r.dot(&tilde.e_omega)
        + 0.5 * theta_tilde.dot(&(gamma_inv * theta_tilde))
}

/// Tracking-error Lyapunov function of the non-adaptive controllers:
/// `e_Omega . J e_Omega / 2 + k_R Psi + c e_R . e_Omega`.
pub fn lyapunov_value_tracking(e_r: &Vec3, e_omega: &Vec3, psi: f64, j: &Mat3, g: &Gains) -> f64 {
    0.5 * e_omega.dot(&(j * e_omega)) + g.k_r * psi + g.c * e_r.dot(e_omega)
}

/// Running maxima of the signals that bound `V'`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundTracker {
    pub theta_tilde_b: f64,
    pub theta_b: f64,
    pub theta_dot_b: f64,
    pub e_omega_tilde_b: f64,
    pub psi_max: f64,
    prev_theta: Option<Vec3>,
}

impl BoundTracker {
    pub fn observe(
        &mut self,
        theta_tilde: &Vec3,
        theta: &Vec3,
        e_omega_tilde: f64,
        psi_tilde: f64,
        dt: f64,
    ) {
        self.theta_tilde_b = self.theta_tilde_b.max(theta_tilde.norm());
        self.theta_b = self.theta_b.max(theta.norm());
        self.e_omega_tilde_b = self.e_omega_tilde_b.max(e_omega_tilde);
        self.psi_max = self.psi_max.max(psi_tilde);
        if let Some(prev) = self.prev_theta {
            self.theta_dot_b = self.theta_dot_b.max((theta - prev).norm() / dt);
        }
        self.prev_theta = Some(*theta);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSummary {
    pub beta: f64,
    pub delta_v: f64,
    pub psi_bound: f64,
    pub bounds: BoundTracker,
}

impl LyapunovSummary {
    /// `beta = lambda_m(W) / lambda_M(W2)` with `psi` the largest observed
    /// configuration error, and
    /// `delta_V = theta~_b^2 |Gamma^{-1}| / 2 + delta / beta`,
    /// `delta = theta~_b (e_Omega~_b theta_b + theta'_b) |Gamma^{-1}|`.
    pub fn from_bounds(
        bounds: BoundTracker,
        g: &Gains,
        j: &Mat3,
        gamma_inv: &Mat3,
    ) -> Result<Self> {
        let psi_bound = bounds.psi_max.min(2.0 - 1e-12);
        let beta = LyapunovWeights::new(g, j, psi_bound)?.beta();
        let gi = gamma_inv.symmetric_eigenvalues().amax();
        let delta = bounds.theta_tilde_b
            * (bounds.e_omega_tilde_b * bounds.theta_b + bounds.theta_dot_b)
            * gi;
        let delta_v = 0.5 * bounds.theta_tilde_b * bounds.theta_tilde_b * gi + delta / beta;
        Ok(Self {
            beta,
            delta_v,
            psi_bound,
            bounds,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSample {
    pub v: f64,
    /// Forward difference to the next step.
    pub v_dot: f64,
    /// `V' + beta V > beta delta_V`.
    pub bound_violated: bool,
    /// `V` above `delta_V` but not decreasing over the step.
    pub increase_above_delta: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    pub summary: LyapunovSummary,
    pub samples: Vec<LyapunovSample>,
    pub bound_violations: usize,
    pub steps_above_delta: usize,
    pub increases_above_delta: usize,
}

/// Per-step diagnostics over a `V` series sampled every `dt`. Violations are
/// reported, not treated as errors.
pub fn lyapunov_diagnostics(
    v_series: &[f64],
    dt: f64,
    summary: &LyapunovSummary,
) -> LyapunovReport {
    let (beta, delta_v) = (summary.beta, summary.delta_v);
    let mut samples = Vec::with_capacity(v_series.len().saturating_sub(1));
    let (mut bound_violations, mut steps_above_delta, mut increases_above_delta) = (0, 0, 0);
    for w in v_series.windows(2) {
        let (v, next) = (w[0], w[1]);
        let v_dot = (next - v) / dt;
        let bound_violated = v_dot + beta * v > beta * delta_v;
        let above = v > delta_v;
        let increase_above_delta = above && next > v;
        bound_violations += bound_violated as usize;
        steps_above_delta += above as usize;
        increases_above_delta += increase_above_delta as usize;
        samples.push(LyapunovSample {
            v,
            v_dot,
            bound_violated,
            increase_above_delta,
        });
    }
    LyapunovReport {
        summary: *summary,
        samples,
        bound_violations,
        steps_above_delta,
        increases_above_delta,
    }
}
