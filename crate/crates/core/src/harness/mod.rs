//! Scenario runner, experiment drivers and metrics.

pub mod log;
pub mod lyapunov;
pub mod metrics;
pub mod scenario;
pub mod sim;
pub mod step;
pub mod sweep;

pub use log::{LogRecord, RunStatus, SimLog, CSV_HEADER};
pub use lyapunov::{lyapunov_diagnostics, LyapunovReport, LyapunovSummary};
pub use metrics::{
    compute_metrics, rms, settle_time, uncertainty_tracking_ratio, MetricWindow, Metrics, Stat,
};
pub use scenario::{
    case1, case2, nominal_inertia, step_scenario, sweep_point, ControllerKind, InitialConditions,
    ScenarioConfig, DEFAULT_DT, DEFAULT_LOG_DT,
};
pub use sim::{check_gate, run_scenario};
pub use step::{step_response_experiment, StepResult, SETTLE_BAND, STEP_CONTROLLERS};
pub use sweep::{
    angle_grid, save_grid_csv, sweep_euler_vs_geometric, write_grid_csv, GridPoint, SweepConfig,
};
