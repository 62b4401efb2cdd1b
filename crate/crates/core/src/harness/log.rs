//! Time-series record of a simulation run.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::harness::lyapunov::LyapunovSummary;
use crate::harness::scenario::ControllerKind;
use crate::so3::Vec3;

/// One logged instant. Quantities that a controller does not have (the
/// reference model of PD/PID) are logged as zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogRecord {
    pub t: f64,
    pub x: Vec3,
    pub x_d: Vec3,
    pub psi: f64,
    pub psi_hat: f64,
    pub psi_tilde: f64,
    pub e_omega: f64,
    pub e_omega_hat: f64,
    pub e_omega_tilde: f64,
    /// Ground-truth lumped uncertainty.
    pub theta: Vec3,
    pub theta_hat: Vec3,
    pub theta_filt: Vec3,
    /// Moment applied to the vehicle, after saturation.
    pub m: Vec3,
    pub m_hat: Vec3,
    pub f: f64,
    pub v: f64,
    /// Right-hand side `beta * delta_V` of the ultimate-bound inequality.
    pub beta_delta_v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// The run stopped early; the log holds everything up to `t`.
    Diverged {
        t: f64,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub controller: ControllerKind,
    pub dt: f64,
    pub records: Vec<LogRecord>,
    pub status: RunStatus,
    /// Lyapunov function at every integration step (empty without diagnostics).
    pub v_series: Vec<f64>,
    pub lyapunov: Option<LyapunovSummary>,
}

pub const CSV_HEADER: [&str; 31] = [
    "t",
    "x1",
    "x2",
    "x3",
    "xd1",
    "xd2",
    "xd3",
    "psi",
    "psi_hat",
    "psi_tilde",
    "e_omega",
    "e_omega_hat",
    "e_omega_tilde",
    "theta1",
    "theta2",
    "theta3",
    "theta_hat1",
    "theta_hat2",
    "theta_hat3",
    "theta_filt1",
    "theta_filt2",
    "theta_filt3",
    "M1",
    "M2",
    "M3",
    "M_hat1",
    "M_hat2",
    "M_hat3",
    "f",
    "V",
    "beta_delta_V",
];

impl SimLog {
    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }

    pub fn last(&self) -> Option<&LogRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for r in &self.records {
            let mut row: Vec<f64> = Vec::with_capacity(CSV_HEADER.len());
            row.push(r.t);
            row.extend(r.x.iter());
            row.extend(r.x_d.iter());
            row.extend([
                r.psi,
                r.psi_hat,
                r.psi_tilde,
                r.e_omega,
                r.e_omega_hat,
                r.e_omega_tilde,
            ]);
            for v in [&r.theta, &r.theta_hat, &r.theta_filt, &r.m, &r.m_hat] {
                row.extend(v.iter());
            }
            row.extend([r.f, r.v, r.beta_delta_v]);
            out.write_record(row.iter().map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
