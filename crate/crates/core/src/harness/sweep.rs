//! Initial-roll sweep comparing the geometric and Euler-angle L1 controllers.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::scenario::{sweep_point, ControllerKind};
use crate::harness::sim::run_scenario;

/// Angles at exactly 180 degrees are replaced by this value so that the
/// initial configuration error stays below 2.
pub const ANTIPODAL_NUDGE_DEG: f64 = 179.9;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Initial roll offsets of the reference model and of the vehicle, deg.
    pub angles_deg: Vec<f64>,
    pub m_a: Vec<f64>,
    pub controllers: Vec<ControllerKind>,
    /// `Psi(3 s)` above this counts as a failure.
    pub fail_threshold: f64,
    pub duration: f64,
    pub dt: f64,
    pub workers: usize,
}

/// Evenly spaced angles from 0 to `max_deg` inclusive.
pub fn angle_grid(step_deg: f64, max_deg: f64) -> Vec<f64> {
    let n = (max_deg / step_deg).round() as usize;
    (0..=n)
        .map(|i| {
            let a = i as f64 * step_deg;
            if a >= 180.0 {
                ANTIPODAL_NUDGE_DEG
            } else {
                a
            }
        })
        .collect()
}

impl SweepConfig {
    /// 37 x 37 angles in 5 degree steps and three added masses: 4107 runs
    /// per controller.
    pub fn full() -> Self {
        Self {
            angles_deg: angle_grid(5.0, 180.0),
            m_a: vec![0.0, 0.25, 0.5],
            controllers: vec![ControllerKind::GeoL1, ControllerKind::EulerL1],
            fail_threshold: 0.5,
            duration: 3.0,
            dt: crate::harness::scenario::DEFAULT_DT,
            workers: 8,
        }
    }

    /// 15 degree steps up to 165 degrees, `m_a` in {0, 0.5}.
    pub fn reduced() -> Self {
        Self {
            angles_deg: angle_grid(15.0, 165.0),
            m_a: vec![0.0, 0.5],
            ..Self::full()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.angles_deg.is_empty() || self.m_a.is_empty() || self.controllers.is_empty() {
            return Err(Error::Validation("sweep grid has an empty axis".into()));
        }
        if let Some(a) = self.angles_deg.iter().find(|a| !(0.0..180.0).contains(*a)) {
            return Err(Error::Validation(format!(
                "sweep angle {a} outside [0, 180)"
            )));
        }
        if let Some(m) = self.m_a.iter().find(|m| !(**m >= 0.0)) {
            return Err(Error::NegativeMass(*m));
        }
        if self.workers == 0 {
            return Err(Error::Validation("workers must be at least 1".into()));
        }
        if !(self.duration > 0.0 && self.dt > 0.0) {
            return Err(Error::Validation(
                "sweep duration and dt must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.angles_deg.len().pow(2) * self.m_a.len() * self.controllers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub phi_hat0_deg: f64,
    pub phi0_deg: f64,
    pub m_a: f64,
    pub controller: ControllerKind,
    /// `Psi` at the end of the run; NaN when the run stopped early.
    pub psi_3s: f64,
    pub failed: bool,
}

fn run_point(
    cfg: &SweepConfig,
    controller: ControllerKind,
    m_a: f64,
    phi_hat0: f64,
    phi0: f64,
) -> GridPoint {
    let mut sc = sweep_point(controller, phi_hat0, phi0, m_a);
    sc.duration = cfg.duration;
    sc.log_dt = cfg.duration;
    sc.dt = cfg.dt;
    sc.gate_override = true;
    let psi_end = match run_scenario(&sc) {
        Ok(log) if !log.diverged() => log.last().map_or(f64::NAN, |r| r.psi),
        _ => f64::NAN,
    };
    GridPoint {
        phi_hat0_deg: phi_hat0,
        phi0_deg: phi0,
        m_a,
        controller,
        psi_3s: psi_end,
        failed: !(psi_end <= cfg.fail_threshold),
    }
}

/// Runs every (controller, m_a, phi_hat0, phi0) combination on a pool of
/// `cfg.workers` threads. Results are ordered by that nesting regardless of
/// scheduling.
pub fn sweep_euler_vs_geometric(cfg: &SweepConfig) -> Result<Vec<GridPoint>> {
    cfg.validate()?;
    let mut jobs = Vec::with_capacity(cfg.len());
    for &c in &cfg.controllers {
        for &m in &cfg.m_a {
            for &ph in &cfg.angles_deg {
                for &p in &cfg.angles_deg {
                    jobs.push((c, m, ph, p));
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|&(c, m, ph, p)| run_point(cfg, c, m, ph, p))
            .collect()
    }))
}

pub const GRID_CSV_HEADER: [&str; 6] = [
    "phi_hat0_deg",
    "phi0_deg",
    "m_a",
    "controller",
    "psi_3s",
    "failed",
];

pub fn write_grid_csv<W: Write>(points: &[GridPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(GRID_CSV_HEADER)?;
    for p in points {
        out.write_record([
            p.phi_hat0_deg.to_string(),
            p.phi0_deg.to_string(),
            p.m_a.to_string(),
            p.controller.name().to_string(),
            p.psi_3s.to_string(),
            (p.failed as u8).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_grid_csv(points: &[GridPoint], path: &Path) -> Result<()> {
    write_grid_csv(
        points,
        std::io::BufWriter::new(std::fs::File::create(path)?),
    )
}
