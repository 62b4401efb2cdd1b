//! Static SVG rendering of run logs and sweep grids.
//!
//! Everything is written with fixed-precision formatting so identical input
//! gives byte-identical files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::{GridPoint, SimLog};

/// Per-log file suffixes, each prefixed with the controller name
/// (`geo-l1_psi.svg`, ...): attitude errors, rate errors, uncertainty and
/// its estimates, horizontal trajectory.
pub const LOG_PLOT_FILES: [&str; 4] = ["psi.svg", "e_omega.svg", "theta.svg", "trajectory.svg"];

const MAX_POINTS: usize = 2000;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];
const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;

struct Series<'a> {
    label: &'a str,
    points: Vec<(f64, f64)>,
}

struct Panel<'a> {
    title: &'a str,
    x_label: &'a str,
    series: Vec<Series<'a>>,
    equal_aspect: bool,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Round step of the form 1, 2 or 5 times a power of ten.
fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn fmt_tick(v: f64, step: f64) -> String {
    let digits = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.digits$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn bounds(points: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = points
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn decimate(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let stride = points.len().div_ceil(MAX_POINTS).max(1);
    let last = points.last().copied();
    let mut out: Vec<_> = points.into_iter().step_by(stride).collect();
    if let (Some(l), Some(o)) = (last, out.last()) {
        if *o != l {
            out.push(l);
        }
    }
    out
}

fn render_panel(out: &mut String, p: &Panel, ox: f64, oy: f64) {
    let (mut x0, mut x1) = bounds(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0)));
    let (mut y0, mut y1) = bounds(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.1)));
    let pw = PANEL_W - MARGIN_L - MARGIN_R;
    let ph = PANEL_H - MARGIN_T - MARGIN_B;
    if p.equal_aspect {
        let scale = ((x1 - x0) / pw).max((y1 - y0) / ph);
        let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        (x0, x1) = (cx - 0.5 * scale * pw, cx + 0.5 * scale * pw);
        (y0, y1) = (cy - 0.5 * scale * ph, cy + 0.5 * scale * ph);
    }
    let sx = |x: f64| ox + MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| oy + MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let _ = writeln!(out, r#"<g class="panel">"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#,
        ox + MARGIN_L + 0.5 * pw,
        oy + 18.0,
        esc(p.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#444"/>"##,
        ox + MARGIN_L,
        oy + MARGIN_T
    );
    for (lo, hi, horizontal) in [(x0, x1, true), (y0, y1, false)] {
        let step = nice_step(hi - lo);
        let mut v = (lo / step).ceil() * step;
        while v <= hi {
            let label = fmt_tick(v, step);
            if horizontal {
                let x = sx(v);
                let _ = writeln!(
                    out,
                    r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{label}</text>"##,
                    oy + MARGIN_T,
                    oy + MARGIN_T + ph,
                    oy + MARGIN_T + ph + 14.0
                );
            } else {
                let y = sy(v);
                let _ = writeln!(
                    out,
                    r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{label}</text>"##,
                    ox + MARGIN_L,
                    ox + MARGIN_L + pw,
                    ox + MARGIN_L - 4.0,
                    y + 3.0
                );
            }
            v += step;
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
        ox + MARGIN_L + 0.5 * pw,
        oy + PANEL_H - 8.0,
        esc(p.x_label)
    );
    for (i, s) in p.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) {
                pen_down = false;
                continue;
            }
            let _ = write!(
                d,
                "{}{:.2},{:.2} ",
                if pen_down { 'L' } else { 'M' },
                sx(x),
                sy(y)
            );
            pen_down = true;
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            d.trim_end()
        );
        let lx = ox + MARGIN_L + pw - 110.0;
        let ly = oy + MARGIN_T + 14.0 + 14.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{ly:.2}" font-size="11">{}</text>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0,
            lx + 22.0,
            esc(s.label)
        );
    }
    let _ = writeln!(out, "</g>");
}

fn svg_document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

fn stacked(panels: &[Panel]) -> String {
    let mut body = String::new();
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut body, p, 0.0, PANEL_H * i as f64);
    }
    svg_document(PANEL_W, PANEL_H * panels.len() as f64, &body)
}

fn series<'a>(
    log: &SimLog,
    label: &'a str,
    f: impl Fn(&crate::harness::LogRecord) -> (f64, f64),
) -> Series<'a> {
    Series {
        label,
        points: decimate(log.records.iter().map(f).collect()),
    }
}

/// Writes the four plots of [`LOG_PLOT_FILES`] into `dir` and returns their
/// paths.
pub fn emit_log_plots(log: &SimLog, dir: &Path) -> Result<Vec<PathBuf>> {
    if log.records.is_empty() {
        return Err(Error::Validation("cannot plot an empty log".into()));
    }
    fs::create_dir_all(dir)?;
    let time = "t [s]";
    let psi = stacked(&[Panel {
        title: "attitude error function",
        x_label: time,
        series: vec![
            series(log, "Psi", |r| (r.t, r.psi)),
            series(log, "Psi_hat", |r| (r.t, r.psi_hat)),
            series(log, "Psi_tilde", |r| (r.t, r.psi_tilde)),
        ],
        equal_aspect: false,
    }]);
    let e_omega = stacked(&[Panel {
        title: "angular velocity error norm [rad/s]",
        x_label: time,
        series: vec![
            series(log, "|e_Omega|", |r| (r.t, r.e_omega)),
            series(log, "|e_Omega_hat|", |r| (r.t, r.e_omega_hat)),
            series(log, "|e_Omega_tilde|", |r| (r.t, r.e_omega_tilde)),
        ],
        equal_aspect: false,
    }]);
    let titles = [
        "uncertainty, axis 1 [N m]",
        "uncertainty, axis 2 [N m]",
        "uncertainty, axis 3 [N m]",
    ];
    let theta_panels: Vec<Panel> = (0..3)
        .map(|k| Panel {
            title: titles[k],
            x_label: time,
            series: vec![
                series(log, "theta", move |r| (r.t, r.theta[k])),
                series(log, "theta_hat", move |r| (r.t, r.theta_hat[k])),
                series(log, "theta_filt", move |r| (r.t, r.theta_filt[k])),
            ],
            equal_aspect: false,
        })
        .collect();
    let theta = stacked(&theta_panels);
    let traj = stacked(&[Panel {
        title: "horizontal trajectory",
        x_label: "x [m]",
        series: vec![
            series(log, "x", |r| (r.x.x, r.x.y)),
            series(log, "x_d", |r| (r.x_d.x, r.x_d.y)),
        ],
        equal_aspect: true,
    }]);

    let mut paths = Vec::new();
    for (name, doc) in LOG_PLOT_FILES.iter().zip([psi, e_omega, theta, traj]) {
        let path = dir.join(format!("{}_{name}", log.controller.name()));
        fs::write(&path, doc)?;
        paths.push(path);
    }
    Ok(paths)
}

fn sorted_unique(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let set: BTreeSet<u64> = values.map(|v| v.to_bits()).collect();
    let mut v: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Maps `Psi` in [0, 2] onto a dark-blue to yellow ramp.
fn heat_color(psi: f64) -> String {
    if !psi.is_finite() {
        return "#888888".into();
    }
    const STOPS: [(f64, [f64; 3]); 4] = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.5, [59.0, 82.0, 139.0]),
        (1.0, [33.0, 145.0, 140.0]),
        (2.0, [253.0, 231.0, 37.0]),
    ];
    let p = psi.clamp(0.0, 2.0);
    let i = STOPS.windows(2).position(|w| p <= w[1].0).unwrap_or(2);
    let ((a, ca), (b, cb)) = (STOPS[i], STOPS[i + 1]);
    let f = (p - a) / (b - a);
    let c: Vec<u8> = (0..3)
        .map(|k| (ca[k] + f * (cb[k] - ca[k])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// One file per controller, `sweep_<controller>.svg`, holding one heatmap
/// of the final `Psi` per added-mass value. Failed points are crossed out.
pub fn emit_sweep_plots(grid: &[GridPoint], dir: &Path) -> Result<Vec<PathBuf>> {
    if grid.is_empty() {
        return Err(Error::Validation("cannot plot an empty grid".into()));
    }
    fs::create_dir_all(dir)?;
    let mut controllers = Vec::new();
    for p in grid {
        if !controllers.contains(&p.controller) {
            controllers.push(p.controller);
        }
    }
    let masses = sorted_unique(grid.iter().map(|p| p.m_a));
    let xs = sorted_unique(grid.iter().map(|p| p.phi0_deg));
    let ys = sorted_unique(grid.iter().map(|p| p.phi_hat0_deg));
    let side = 360.0;
    let cell_w = side / xs.len() as f64;
    let cell_h = side / ys.len() as f64;
    let idx = |v: &[f64], x: f64| v.iter().position(|a| *a == x).unwrap_or(0);

    let mut paths = Vec::new();
    for ctrl in controllers {
        let mut body = String::new();
        for (pi, m_a) in masses.iter().enumerate() {
            let ox = 20.0 + pi as f64 * (side + MARGIN_L + 20.0) + MARGIN_L;
            let oy = MARGIN_T + 10.0;
            let _ = writeln!(body, r#"<g class="panel">"#);
            let _ = writeln!(
                body,
                r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{} m_a = {m_a:?} kg</text>"#,
                ox + 0.5 * side,
                oy - 12.0,
                ctrl.name()
            );
            for p in grid
                .iter()
                .filter(|p| p.controller == ctrl && p.m_a == *m_a)
            {
                let x = ox + idx(&xs, p.phi0_deg) as f64 * cell_w;
                let y = oy + side - (idx(&ys, p.phi_hat0_deg) + 1) as f64 * cell_h;
                let _ = writeln!(
                    body,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{cell_w:.2}" height="{cell_h:.2}" fill="{}"/>"#,
                    heat_color(p.psi_3s)
                );
                if p.failed {
                    let _ = writeln!(
                        body,
                        r#"<path class="failed" d="M{x:.2},{y:.2} L{:.2},{:.2} M{:.2},{y:.2} L{x:.2},{:.2}" stroke="red" stroke-width="1"/>"#,
                        x + cell_w,
                        y + cell_h,
                        x + cell_w,
                        y + cell_h
                    );
                }
            }
            let _ = writeln!(
                body,
                r##"<rect x="{ox:.2}" y="{oy:.2}" width="{side:.2}" height="{side:.2}" fill="none" stroke="#444"/>"##
            );
            for (k, v) in xs.iter().enumerate().step_by(xs.len().div_ceil(7).max(1)) {
                let _ = writeln!(
                    body,
                    r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{v:.0}</text>"#,
                    ox + (k as f64 + 0.5) * cell_w,
                    oy + side + 14.0
                );
            }
            for (k, v) in ys.iter().enumerate().step_by(ys.len().div_ceil(7).max(1)) {
                let _ = writeln!(
                    body,
                    r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{v:.0}</text>"#,
                    ox - 4.0,
                    oy + side - (k as f64 + 0.5) * cell_h + 3.0
                );
            }
            let _ = writeln!(
                body,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">initial roll [deg]</text>"#,
                ox + 0.5 * side,
                oy + side + 30.0
            );
            let _ = writeln!(
                body,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">reference roll [deg]</text>"#,
                ox - 40.0,
                oy + 0.5 * side,
                ox - 40.0,
                oy + 0.5 * side
            );
            let _ = writeln!(body, "</g>");
        }
        let width = 20.0 + masses.len() as f64 * (side + MARGIN_L + 20.0);
        let height = MARGIN_T + 10.0 + side + MARGIN_B + 10.0;
        let path = dir.join(format!("sweep_{}.svg", ctrl.name()));
        fs::write(&path, svg_document(width, height, &body))?;
        paths.push(path);
    }
    Ok(paths)
}
