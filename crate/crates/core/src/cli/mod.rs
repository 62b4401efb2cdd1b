//! Configuration documents and plot rendering for the command-line tool.

pub mod config;
pub mod plots;

pub use config::{parse_config, serialize_config};
pub use plots::{emit_log_plots, emit_sweep_plots, LOG_PLOT_FILES};
