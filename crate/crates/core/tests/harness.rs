use so3l1::error::Error;
use so3l1::harness::{
    angle_grid, case1, check_gate, compute_metrics, run_scenario, sweep_euler_vs_geometric,
    write_grid_csv, ControllerKind, InitialConditions, LogRecord, MetricWindow, RunStatus,
    ScenarioConfig, SimLog, SweepConfig, CSV_HEADER,
};
use so3l1::so3::Vec3;
use so3l1::trajectories::Trajectory;

fn short_case1(kind: ControllerKind) -> ScenarioConfig {
    ScenarioConfig {
        duration: 0.5,
        ..case1(kind)
    }
}

#[test]
fn identical_configs_give_bit_identical_logs() {
    let cfg = short_case1(ControllerKind::GeoL1);
    let (a, b) = (run_scenario(&cfg).unwrap(), run_scenario(&cfg).unwrap());
    assert_eq!(a, b);
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
    let header = String::from_utf8(ca).unwrap();
    assert_eq!(header.lines().next().unwrap(), CSV_HEADER.join(","));
}

#[test]
fn gate_rejects_inverted_start_for_pd_unless_overridden() {
    let cfg = short_case1(ControllerKind::GeoPd);
    assert!(matches!(check_gate(&cfg), Err(Error::GateViolation(_))));
    assert!(matches!(run_scenario(&cfg), Err(Error::GateViolation(_))));
    let forced = ScenarioConfig {
        gate_override: true,
        ..cfg
    };
    assert!(run_scenario(&forced).is_ok());
    // The L1 gate is on the reference/true mismatch, which starts at zero.
    assert!(check_gate(&short_case1(ControllerKind::GeoL1)).is_ok());
}

#[test]
fn l1_gate_uses_reference_mismatch() {
    let mut cfg = short_case1(ControllerKind::GeoL1);
    cfg.init.ref_omega = Vec3::new(0.0, 0.0, 30.0);
    assert!(matches!(check_gate(&cfg), Err(Error::GateViolation(_))));
    cfg.init.ref_omega = Vec3::new(0.0, 0.0, 0.5);
    assert!(check_gate(&cfg).is_ok());
    cfg.init.ref_omega = Vec3::zeros();
    cfg.init.ref_attitude_deg = Vec3::new(170.0, 0.0, 0.0);
    assert!(check_gate(&cfg).is_ok());
    // Half a turn away from the true 178 degree roll.
    cfg.init.ref_attitude_deg = Vec3::new(-2.0, 0.0, 0.0);
    assert!(matches!(check_gate(&cfg), Err(Error::GateViolation(_))));
}

#[test]
fn undisturbed_pd_error_decays_monotonically() {
    let cfg = ScenarioConfig {
        controller: ControllerKind::GeoPd,
        trajectory: Trajectory::Attitude {
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
        },
        init: InitialConditions {
            attitude_deg: Vec3::new(60.0, 20.0, -40.0),
            ..Default::default()
        },
        duration: 3.0,
        ..Default::default()
    };
    let log = run_scenario(&cfg).unwrap();
    let after: Vec<f64> = log
        .records
        .iter()
        .filter(|r| r.t >= 0.05)
        .map(|r| r.psi)
        .collect();
    for w in after.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15, "{} -> {}", w[0], w[1]);
    }
    assert!(*after.last().unwrap() < 1e-6);
}

#[test]
fn metrics_use_final_quarter_and_population_std() {
    let records: Vec<LogRecord> = (0..=100)
        .map(|k| LogRecord {
            t: 0.1 * k as f64,
            psi: if k % 2 == 0 { 1.0 } else { 3.0 },
            x: Vec3::new(if k >= 75 { 2.0 } else { 100.0 }, 0.0, 0.0),
            ..Default::default()
        })
        .collect();
    let log = SimLog {
        controller: ControllerKind::GeoPd,
        dt: 0.1,
        records,
        status: RunStatus::Completed,
        v_series: Vec::new(),
        lyapunov: None,
    };
    let m = compute_metrics(&log, None).unwrap();
    assert_eq!(m.samples, 26);
    assert!((m.position.mean - 2.0).abs() < 1e-12);
    assert!(m.position.std.abs() < 1e-12);
    // 13 samples at 1 and 13 at 3.
    assert!((m.psi.mean - 2.0).abs() < 1e-12);
    assert!((m.psi.std - 1.0).abs() < 1e-12);
    let empty = MetricWindow {
        t_start: 20.0,
        t_end: 30.0,
    };
    assert!(matches!(
        compute_metrics(&log, Some(empty)),
        Err(Error::EmptyWindow(..))
    ));
}

fn tiny_sweep(workers: usize) -> SweepConfig {
    SweepConfig {
        angles_deg: angle_grid(60.0, 180.0),
        m_a: vec![0.0, 0.5],
        duration: 0.3,
        workers,
        ..SweepConfig::full()
    }
}

#[test]
fn sweep_order_is_independent_of_worker_count() {
    let a = sweep_euler_vs_geometric(&tiny_sweep(1)).unwrap();
    let b = sweep_euler_vs_geometric(&tiny_sweep(3)).unwrap();
    assert_eq!(a.len(), 4 * 4 * 2 * 2);
    for (p, q) in a.iter().zip(&b) {
        assert_eq!(p.phi_hat0_deg, q.phi_hat0_deg);
        assert_eq!(p.phi0_deg, q.phi0_deg);
        assert_eq!(p.controller, q.controller);
        assert_eq!(p.psi_3s.to_bits(), q.psi_3s.to_bits());
    }
    assert_eq!(a[0].controller, ControllerKind::GeoL1);
    assert_eq!(a.last().unwrap().controller, ControllerKind::EulerL1);
    assert_eq!(a.last().unwrap().phi0_deg, 179.9);
}

#[test]
fn grid_csv_has_documented_columns() {
    let grid = sweep_euler_vs_geometric(&SweepConfig {
        angles_deg: vec![0.0, 90.0],
        m_a: vec![0.0],
        duration: 0.1,
        workers: 1,
        ..SweepConfig::full()
    })
    .unwrap();
    let mut buf = Vec::new();
    write_grid_csv(&grid, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "phi_hat0_deg,phi0_deg,m_a,controller,psi_3s,failed"
    );
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 8);
    for row in rows {
        let cols: Vec<_> = row.split(',').collect();
        assert_eq!(cols.len(), 6);
        assert!(cols[5] == "0" || cols[5] == "1");
        assert!(cols[3] == "geo-l1" || cols[3] == "euler-l1");
    }
}

#[test]
fn divergence_is_reported_not_raised() {
    // A step far beyond the rate loop's stability limit.
    let cfg = ScenarioConfig {
        controller: ControllerKind::GeoPd,
        trajectory: Trajectory::Hover { x_d: Vec3::zeros() },
        init: InitialConditions {
            attitude_deg: Vec3::new(30.0, 0.0, 0.0),
            ..Default::default()
        },
        dt: 0.1,
        log_dt: 0.1,
        duration: 5.0,
        ..Default::default()
    };
    let log = run_scenario(&cfg).unwrap();
    let RunStatus::Diverged { t, .. } = log.status else {
        panic!("run completed: {:?}", log.last());
    };
    assert!(t < 5.0);
    assert!(!log.records.is_empty());
    assert!(log.records.iter().all(|r| r.t <= t));
}
