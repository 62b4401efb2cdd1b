//! Error statistics over a time window of a log.

use crate::error::{Error, Result};
use crate::harness::log::SimLog;
use crate::so3::Vec3;

/// Closed time interval `[t_start, t_end]`, s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricWindow {
    pub t_start: f64,
    pub t_end: f64,
}

impl MetricWindow {
    /// The final quarter of the logged time span.
    pub fn final_quarter(log: &SimLog) -> Self {
        let t_end = log.last().map_or(0.0, |r| r.t);
        let t0 = log.records.first().map_or(0.0, |r| r.t);
        Self {
            t_start: t_end - 0.25 * (t_end - t0),
            t_end,
        }
    }
}

/// Mean and standard deviation of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub position: Stat,
    pub psi: Stat,
    pub samples: usize,
}

/// Mean and population standard deviation (divisor `n`).
pub fn mean_std(values: &[f64]) -> Option<Stat> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(Stat {
        mean,
        std: var.sqrt(),
    })
}

/// Statistics of `|x - x_d|` and `Psi` over the records inside `window`
/// (the final 25% of the run when `None`).
pub fn compute_metrics(log: &SimLog, window: Option<MetricWindow>) -> Result<Metrics> {
    let w = window.unwrap_or_else(|| MetricWindow::final_quarter(log));
    let inside: Vec<_> = log
        .records
        .iter()
        .filter(|r| r.t >= w.t_start && r.t <= w.t_end)
        .collect();
    let pos: Vec<f64> = inside.iter().map(|r| (r.x - r.x_d).norm()).collect();
    let psi: Vec<f64> = inside.iter().map(|r| r.psi).collect();
    match (mean_std(&pos), mean_std(&psi)) {
        (Some(position), Some(psi)) => Ok(Metrics {
            position,
            psi,
            samples: inside.len(),
        }),
        _ => Err(Error::EmptyWindow(w.t_start, w.t_end)),
    }
}

/// Root mean square of vector norms.
pub fn rms<'a>(values: impl IntoIterator<Item = &'a Vec3>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v.norm_squared(), n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// First logged time at which `Psi` drops below `band`.
pub fn settle_time(log: &SimLog, band: f64) -> Option<f64> {
    log.records.iter().find(|r| r.psi < band).map(|r| r.t)
}

/// `RMS(theta_filt - theta) / RMS(theta)` over records with `t >= t_start`.
pub fn uncertainty_tracking_ratio(log: &SimLog, t_start: f64) -> f64 {
    let tail: Vec<_> = log.records.iter().filter(|r| r.t >= t_start).collect();
    let err: Vec<Vec3> = tail.iter().map(|r| r.theta_filt - r.theta).collect();
    rms(&err) / rms(tail.iter().map(|r| &r.theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::log::{LogRecord, RunStatus};
    use crate::harness::scenario::ControllerKind;

    fn log_with(psi: &[f64]) -> SimLog {
        let records = psi
            .iter()
            .enumerate()
            .map(|(i, &p)| LogRecord {
                t: i as f64,
                psi: p,
                ..Default::default()
            })
            .collect();
        SimLog {
            controller: ControllerKind::GeoPd,
            dt: 1.0,
            records,
            status: RunStatus::Completed,
            v_series: vec![],
            lyapunov: None,
        }
    }

    #[test]
    fn constant_and_alternating() {
        let m = compute_metrics(&log_with(&[0.3; 8]), None).unwrap();
        assert_eq!(m.psi.mean, 0.3);
        assert_eq!(m.psi.std, 0.0);
        let s = mean_std(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!((s.mean, s.std), (0.0, 1.0));
    }

    #[test]
    fn default_window_is_final_quarter() {
        // t = 0..8, window [6, 8]
        let m = compute_metrics(
            &log_with(&[9.0, 9.0, 9.0, 9.0, 9.0, 9.0, 1.0, 1.0, 1.0]),
            None,
        )
        .unwrap();
        assert_eq!(m.samples, 3);
        assert_eq!(m.psi.mean, 1.0);
    }

    #[test]
    fn empty_window() {
        let w = MetricWindow {
            t_start: 20.0,
            t_end: 30.0,
        };
        assert!(matches!(
            compute_metrics(&log_with(&[1.0, 2.0]), Some(w)),
            Err(Error::EmptyWindow(..))
        ));
    }

    #[test]
    fn settle() {
        assert_eq!(
            settle_time(&log_with(&[1.0, 0.1, 0.04, 0.2]), 0.05),
            Some(2.0)
        );
        assert_eq!(settle_time(&log_with(&[1.0]), 0.05), None);
    }
}
