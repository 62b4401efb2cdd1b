//! Attitude step response of the geometric controllers with shared PD gains.

use crate::error::{Error, Result};
use crate::harness::log::{RunStatus, SimLog};
use crate::harness::metrics::settle_time;
use crate::harness::scenario::{step_scenario, ControllerKind, ScenarioConfig};
use crate::harness::sim::run_scenario;

/// Band on `Psi` used for the settling comparison.
pub const SETTLE_BAND: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub controller: ControllerKind,
    pub log: SimLog,
    /// First time `Psi < SETTLE_BAND`.
    pub settle_time: Option<f64>,
}

pub const STEP_CONTROLLERS: [ControllerKind; 3] = [
    ControllerKind::GeoL1,
    ControllerKind::GeoPd,
    ControllerKind::GeoPid,
];

/// Runs the 30/30/30 degree step for each geometric controller. `tweak` is
/// applied to every scenario (e.g. to change `dt`); the gains are shared.
pub fn step_response_experiment(
    saturation: Option<f64>,
    tweak: impl Fn(&mut ScenarioConfig),
) -> Result<Vec<StepResult>> {
    STEP_CONTROLLERS
        .iter()
        .map(|&c| {
            let mut cfg = step_scenario(c, saturation);
            tweak(&mut cfg);
            let log = run_scenario(&cfg)?;
            if let RunStatus::Diverged { t, reason } = &log.status {
                return Err(Error::Diverged {
                    t: *t,
                    reason: format!("{c}: {reason}"),
                });
            }
            let settle_time = settle_time(&log, SETTLE_BAND);
            Ok(StepResult {
                controller: c,
                log,
                settle_time,
            })
        })
        .collect()
}
