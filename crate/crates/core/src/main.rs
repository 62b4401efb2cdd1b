use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use so3l1::cli::{emit_log_plots, emit_sweep_plots, parse_config};
use so3l1::error::{Error, Result};
use so3l1::harness::{
    angle_grid, case1, case2, compute_metrics, run_scenario, save_grid_csv, settle_time,
    step_scenario, sweep_euler_vs_geometric, ControllerKind, RunStatus, ScenarioConfig, SimLog,
    SweepConfig, SETTLE_BAND, STEP_CONTROLLERS,
};

const WORKERS_ENV: &str = "SO3L1_WORKERS";

/// Geometric L1 adaptive attitude control simulations.
///
/// Exit status: 0 when every run completed, 2 when a run diverged (its log
/// is still written), 1 for usage or configuration errors.
#[derive(Parser, Debug)]
#[command(name = "so3l1", version)]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Shared {
    /// Integration step, s.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Simulated time, s.
    #[arg(long, global = true)]
    duration: Option<f64>,
    /// geo-l1, geo-pd, geo-pid or euler-l1.
    #[arg(long, global = true)]
    controller: Option<ControllerKind>,
    /// Output directory for CSV logs and SVG plots.
    #[arg(long, global = true, default_value = "so3l1-out")]
    out: PathBuf,
    /// Worker threads for sweeps; SO3L1_WORKERS takes precedence.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Run even when the initial conditions violate the stability gate.
    #[arg(long, global = true)]
    gate_override: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the scenario described by a key = value document.
    Simulate { config: PathBuf },
    /// Circle tracking from a nearly inverted attitude with a constant disturbance.
    Case1,
    /// Circle tracking under the multi-tone disturbance.
    Case2,
    /// Initial-roll sweep of the geometric and Euler-angle L1 controllers.
    Sweep {
        /// 5 degree grid up to 180 degrees with three added masses.
        #[arg(long)]
        full: bool,
        /// Angle spacing, deg.
        #[arg(long)]
        step_deg: Option<f64>,
        /// Largest angle, deg.
        #[arg(long)]
        max_deg: Option<f64>,
        /// Added masses, kg, comma separated.
        #[arg(long, value_delimiter = ',')]
        m_a: Option<Vec<f64>>,
    },
    /// 30/30/30 degree attitude step of the geometric controllers.
    Step {
        /// Per-axis moment limit, N m.
        #[arg(long, num_args = 0..=1, default_missing_value = "5")]
        saturation: Option<f64>,
    },
}

enum Outcome {
    Completed,
    Diverged,
}

fn workers(shared: &Shared) -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Error::Validation(format!(
                "{WORKERS_ENV} must be a positive integer, got '{v}'"
            ))
        }),
        Err(_) => Ok(shared.workers),
    }
}

fn apply_shared(cfg: &mut ScenarioConfig, shared: &Shared) -> Result<()> {
    if let Some(dt) = shared.dt {
        cfg.dt = dt;
    }
    if let Some(d) = shared.duration {
        cfg.duration = d;
    }
    if let Some(c) = shared.controller {
        cfg.controller = c;
    }
    cfg.gate_override |= shared.gate_override;
    cfg.validate()
}

fn report(log: &SimLog) {
    match &log.status {
        RunStatus::Completed => println!("{}: completed", log.controller),
        RunStatus::Diverged { t, reason } => {
            println!("{}: diverged at t = {t:.4} s ({reason})", log.controller)
        }
    }
    if let Some(r) = log.last() {
        println!(
            "  final: t = {:.3} s, Psi = {:.3e}, |e_Omega| = {:.3e} rad/s",
            r.t, r.psi, r.e_omega
        );
    }
    if let Ok(m) = compute_metrics(log, None) {
        println!(
            "  final quarter: |e_x| = {:.4} +- {:.4} m, Psi = {:.4e} +- {:.4e}",
            m.position.mean, m.position.std, m.psi.mean, m.psi.std
        );
    }
}

fn write_log(log: &SimLog, csv: &Path, plot_dir: &Path) -> Result<()> {
    if let Some(parent) = csv.parent() {
        fs::create_dir_all(parent)?;
    }
    log.save_csv(csv)?;
    if !log.records.is_empty() {
        emit_log_plots(log, plot_dir)?;
    }
    println!("  wrote {}", csv.display());
    Ok(())
}

fn run_single(cfg: &ScenarioConfig, out: &Path, stem: &str) -> Result<Outcome> {
    let log = run_scenario(cfg)?;
    report(&log);
    let csv = cfg
        .output
        .clone()
        .unwrap_or_else(|| out.join(format!("{stem}_{}.csv", cfg.controller)));
    write_log(&log, &csv, out)?;
    Ok(if log.diverged() {
        Outcome::Diverged
    } else {
        Outcome::Completed
    })
}

fn run(cli: Cli) -> Result<Outcome> {
    let shared = &cli.shared;
    let out = &shared.out;
    match cli.command {
        Command::Simulate { config } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| Error::Io(format!("{}: {e}", config.display())))?;
            let mut cfg = parse_config(&text)?;
            apply_shared(&mut cfg, shared)?;
            run_single(&cfg, out, "simulate")
        }
        Command::Case1 | Command::Case2 => {
            let (preset, stem): (fn(ControllerKind) -> ScenarioConfig, _) =
                if matches!(cli.command, Command::Case1) {
                    (case1, "case1")
                } else {
                    (case2, "case2")
                };
            let mut cfg = preset(shared.controller.unwrap_or_default());
            apply_shared(&mut cfg, shared)?;
            run_single(&cfg, out, stem)
        }
        Command::Sweep {
            full,
            step_deg,
            max_deg,
            m_a,
        } => {
            let mut cfg = if full {
                SweepConfig::full()
            } else {
                SweepConfig::reduced()
            };
            if step_deg.is_some() || max_deg.is_some() {
                let step = step_deg.unwrap_or(if full { 5.0 } else { 15.0 });
                let max = max_deg.unwrap_or(if full { 180.0 } else { 165.0 });
                if !(step > 0.0 && max >= 0.0) {
                    return Err(Error::Validation(
                        "sweep step and max angle must be positive".into(),
                    ));
                }
                cfg.angles_deg = angle_grid(step, max);
            }
            if let Some(m) = m_a {
                cfg.m_a = m;
            }
            if let Some(c) = shared.controller {
                cfg.controllers = vec![c];
            }
            if let Some(dt) = shared.dt {
                cfg.dt = dt;
            }
            if let Some(d) = shared.duration {
                cfg.duration = d;
            }
            if let Some(w) = workers(shared)? {
                cfg.workers = w;
            }
            cfg.validate()?;
            println!("sweep: {} runs on {} workers", cfg.len(), cfg.workers);
            let start = std::time::Instant::now();
            let grid = sweep_euler_vs_geometric(&cfg)?;
            println!("  finished in {:.1} s", start.elapsed().as_secs_f64());
            for &c in &cfg.controllers {
                for &m in &cfg.m_a {
                    let pts: Vec<_> = grid
                        .iter()
                        .filter(|p| p.controller == c && p.m_a == m)
                        .collect();
                    let failed = pts.iter().filter(|p| p.failed).count();
                    println!("  {c}, m_a = {m}: {failed} of {} points failed", pts.len());
                }
            }
            fs::create_dir_all(out)?;
            let csv = out.join("sweep.csv");
            save_grid_csv(&grid, &csv)?;
            emit_sweep_plots(&grid, out)?;
            println!("  wrote {}", csv.display());
            Ok(Outcome::Completed)
        }
        Command::Step { saturation } => {
            let mut outcome = Outcome::Completed;
            for c in STEP_CONTROLLERS {
                let mut cfg = step_scenario(c, saturation);
                if let Some(dt) = shared.dt {
                    cfg.dt = dt;
                }
                if let Some(d) = shared.duration {
                    cfg.duration = d;
                }
                cfg.gate_override |= shared.gate_override;
                cfg.validate()?;
                let log = run_scenario(&cfg)?;
                report(&log);
                let peak = log.records.iter().map(|x| x.m.amax()).fold(0.0, f64::max);
                match settle_time(&log, SETTLE_BAND) {
                    Some(t) => {
                        println!("  Psi < {SETTLE_BAND} first at {t:.3} s, max |M| = {peak:.3} N m")
                    }
                    None => println!("  never within Psi < {SETTLE_BAND}, max |M| = {peak:.3} N m"),
                }
                write_log(&log, &out.join(format!("step_{c}.csv")), out)?;
                if log.diverged() {
                    outcome = Outcome::Diverged;
                }
            }
            Ok(outcome)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(Outcome::Completed) => ExitCode::SUCCESS,
        Ok(Outcome::Diverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
