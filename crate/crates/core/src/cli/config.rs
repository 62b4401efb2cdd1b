//! Line-oriented `key = value` scenario documents.
//!
//! Keys are dotted (`plant.m`, `gains.k_R`, ...). Vectors and matrices are
//! comma-separated, matrices row-major. `#` starts a comment. Omitted keys
//! keep the defaults of [`ScenarioConfig::default`]; `gains.c` is recomputed
//! from the inertia and gains unless given explicitly. Disturbance keys may
//! repeat; each occurrence adds one component, in document order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::controllers::{lyapunov_c, Gains};
use crate::disturbances::{Disturbance, DisturbanceSpec};
use crate::error::{Error, Result};
use crate::harness::ScenarioConfig;
use crate::l1::{L1Params, RefIntegrator};
use crate::rigid_body::AttitudeIntegrator;
use crate::so3::{Mat3, Vec3};
use crate::trajectories::{SigmoidCircle, Trajectory};

const SCALAR_KEYS: &[&str] = &[
    "controller",
    "plant.m",
    "plant.J",
    "plant.m_a",
    "plant.r",
    "plant.g",
    "gains.k_x",
    "gains.k_v",
    "gains.k_R",
    "gains.k_Omega",
    "gains.k_R_hat",
    "gains.k_R_tilde",
    "gains.k_Omega_tilde",
    "gains.k_I",
    "gains.c",
    "l1.gamma",
    "l1.a",
    "l1.theta_max",
    "l1.eps_proj",
    "l1.ref_integrator",
    "trajectory.kind",
    "trajectory.rho",
    "trajectory.omega",
    "trajectory.center",
    "trajectory.a",
    "trajectory.b",
    "trajectory.c",
    "trajectory.t0",
    "trajectory.x_d",
    "trajectory.roll",
    "trajectory.pitch",
    "trajectory.yaw",
    "trajectory.roll_deg",
    "trajectory.pitch_deg",
    "trajectory.yaw_deg",
    "init.roll_deg",
    "init.pitch_deg",
    "init.yaw_deg",
    "init.omega",
    "init.ref_roll_deg",
    "init.ref_pitch_deg",
    "init.ref_yaw_deg",
    "init.ref_omega",
    "sim.dt",
    "sim.duration",
    "sim.log_dt",
    "sim.integrator",
    "sim.gate_override",
    "sim.diagnostics",
    "saturation.limit",
    "output.path",
];

const DISTURBANCE_KEYS: &[&str] = &[
    "disturbance.constant",
    "disturbance.harmonic",
    "disturbance.added_mass",
];

struct Entry {
    line: usize,
    value: String,
}

struct Doc {
    entries: BTreeMap<&'static str, Entry>,
}

fn perr(line: usize, key: &str, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_f64(line: usize, key: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| perr(line, key, format!("expected a number, got '{}'", s.trim())))
}

fn parse_list(line: usize, key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|p| parse_f64(line, key, p)).collect()
}

fn parse_vec3(line: usize, key: &str, s: &str) -> Result<Vec3> {
    let v = parse_list(line, key, s)?;
    if v.len() != 3 {
        return Err(perr(
            line,
            key,
            format!("expected 3 values, got {}", v.len()),
        ));
    }
    Ok(Vec3::new(v[0], v[1], v[2]))
}

/// One value (`x I`), three (diagonal) or nine (row-major).
fn parse_mat3(line: usize, key: &str, s: &str) -> Result<Mat3> {
    let v = parse_list(line, key, s)?;
    match v.len() {
        1 => Ok(Mat3::identity() * v[0]),
        3 => Ok(Mat3::from_diagonal(&Vec3::new(v[0], v[1], v[2]))),
        9 => Ok(Mat3::from_row_slice(&v)),
        n => Err(perr(
            line,
            key,
            format!("expected 1, 3 or 9 values, got {n}"),
        )),
    }
}

fn parse_bool(line: usize, key: &str, s: &str) -> Result<bool> {
    match s.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(perr(
            line,
            key,
            format!("expected true or false, got '{other}'"),
        )),
    }
}

impl Doc {
    fn get<T>(
        &self,
        key: &'static str,
        f: impl Fn(usize, &str, &str) -> Result<T>,
    ) -> Result<Option<T>> {
        self.entries
            .get(key)
            .map(|e| f(e.line, key, &e.value))
            .transpose()
    }

    fn f64_or(&self, key: &'static str, default: f64) -> Result<f64> {
        Ok(self.get(key, parse_f64)?.unwrap_or(default))
    }

    fn vec3_or(&self, key: &'static str, default: Vec3) -> Result<Vec3> {
        Ok(self.get(key, parse_vec3)?.unwrap_or(default))
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }
}

fn to_validation(e: Error) -> Error {
    match e {
        Error::Validation(_) | Error::Parse { .. } => e,
        other => Error::Validation(other.to_string()),
    }
}

/// Parses and validates a scenario document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut entries = BTreeMap::new();
    let mut disturbances = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| perr(line, content, "expected 'key = value'"))?;
        let (k, v) = (k.trim(), v.trim().to_string());
        if let Some(key) = DISTURBANCE_KEYS.iter().find(|d| **d == k) {
            disturbances.push((line, *key, v));
            continue;
        }
        let key = SCALAR_KEYS
            .iter()
            .find(|s| **s == k)
            .ok_or_else(|| perr(line, k, "unknown key"))?;
        if entries.insert(*key, Entry { line, value: v }).is_some() {
            return Err(perr(line, k, "duplicate key"));
        }
    }
    let doc = Doc { entries };
    let d = ScenarioConfig::default();

    let m = doc.f64_or("plant.m", d.m)?;
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Validation(format!(
            "plant.m must be positive, got {m}"
        )));
    }
    let j = doc.get("plant.J", parse_mat3)?.unwrap_or(d.j);
    let controller = match doc.entries.get("controller") {
        Some(e) => e.value.parse().map_err(|_| {
            perr(
                e.line,
                "controller",
                format!("unknown controller '{}'", e.value),
            )
        })?,
        None => d.controller,
    };

    let dg = Gains::defaults(&j).unwrap_or(d.gains);
    let mut gains = Gains {
        k_x: doc.f64_or("gains.k_x", dg.k_x)?,
        k_v: doc.f64_or("gains.k_v", dg.k_v)?,
        k_r: doc.f64_or("gains.k_R", dg.k_r)?,
        k_omega: doc.f64_or("gains.k_Omega", dg.k_omega)?,
        k_r_hat: doc.f64_or("gains.k_R_hat", dg.k_r_hat)?,
        k_r_tilde: doc.f64_or("gains.k_R_tilde", dg.k_r_tilde)?,
        k_omega_tilde: doc.f64_or("gains.k_Omega_tilde", dg.k_omega_tilde)?,
        k_i: doc.f64_or("gains.k_I", dg.k_i)?,
        c: 0.0,
    };
    gains.c = match doc.get("gains.c", parse_f64)? {
        Some(c) => c,
        None => lyapunov_c(gains.k_r_tilde, gains.k_omega_tilde, &j),
    };

    let ref_integrator = match doc.entries.get("l1.ref_integrator") {
        None => d.l1.ref_integrator,
        Some(e) => match e.value.as_str() {
            "rk4" => RefIntegrator::Rk4,
            "euler" => RefIntegrator::Euler,
            other => {
                return Err(perr(
                    e.line,
                    "l1.ref_integrator",
                    format!("expected rk4 or euler, got '{other}'"),
                ))
            }
        },
    };
    let l1 = L1Params::new(
        doc.get("l1.gamma", parse_mat3)?.unwrap_or(*d.l1.gamma()),
        doc.f64_or("l1.a", d.l1.a)?,
        doc.f64_or("l1.theta_max", d.l1.theta_max)?,
        doc.f64_or("l1.eps_proj", d.l1.eps_proj)?,
        ref_integrator,
    )?;

    let trajectory = parse_trajectory(&doc, d.trajectory)?;

    let mut components = Vec::new();
    for (line, key, v) in disturbances {
        components.push(match key {
            "disturbance.constant" => Disturbance::Constant(parse_vec3(line, key, &v)?),
            "disturbance.harmonic" => Disturbance::Harmonic {
                scale: parse_vec3(line, key, &v)?,
            },
            _ => {
                let vals = parse_list(line, key, &v)?;
                if vals.len() != 4 {
                    return Err(perr(
                        line,
                        key,
                        "expected m_a followed by 3 arm coordinates",
                    ));
                }
                Disturbance::AddedMass {
                    m_a: vals[0],
                    r: Vec3::new(vals[1], vals[2], vals[3]),
                }
            }
        });
    }
    let disturbance = DisturbanceSpec::new(components).map_err(to_validation)?;

    let mut init = d.init;
    init.attitude_deg = Vec3::new(
        doc.f64_or("init.roll_deg", d.init.attitude_deg.x)?,
        doc.f64_or("init.pitch_deg", d.init.attitude_deg.y)?,
        doc.f64_or("init.yaw_deg", d.init.attitude_deg.z)?,
    );
    init.ref_attitude_deg = Vec3::new(
        doc.f64_or("init.ref_roll_deg", d.init.ref_attitude_deg.x)?,
        doc.f64_or("init.ref_pitch_deg", d.init.ref_attitude_deg.y)?,
        doc.f64_or("init.ref_yaw_deg", d.init.ref_attitude_deg.z)?,
    );
    init.omega = doc.vec3_or("init.omega", d.init.omega)?;
    init.ref_omega = doc.vec3_or("init.ref_omega", d.init.ref_omega)?;

    let integrator = match doc.entries.get("sim.integrator") {
        None => d.integrator,
        Some(e) => match e.value.as_str() {
            "rk4_reproject" => AttitudeIntegrator::Rk4Reproject,
            "lie_rk4" => AttitudeIntegrator::LieRk4,
            other => {
                return Err(perr(
                    e.line,
                    "sim.integrator",
                    format!("expected rk4_reproject or lie_rk4, got '{other}'"),
                ))
            }
        },
    };
    let saturation = match doc.entries.get("saturation.limit") {
        None => d.saturation,
        Some(e) if e.value == "none" => None,
        Some(e) => Some(parse_f64(e.line, "saturation.limit", &e.value)?),
    };

    let cfg = ScenarioConfig {
        m,
        j,
        m_a: doc.f64_or("plant.m_a", d.m_a)?,
        r_arm: doc.vec3_or("plant.r", d.r_arm)?,
        g: doc.f64_or("plant.g", d.g)?,
        controller,
        gains,
        l1,
        trajectory,
        disturbance,
        init,
        dt: doc.f64_or("sim.dt", d.dt)?,
        duration: doc.f64_or("sim.duration", d.duration)?,
        log_dt: doc.f64_or("sim.log_dt", d.log_dt)?,
        integrator,
        saturation,
        gate_override: doc
            .get("sim.gate_override", parse_bool)?
            .unwrap_or(d.gate_override),
        diagnostics: doc
            .get("sim.diagnostics", parse_bool)?
            .unwrap_or(d.diagnostics),
        output: doc
            .entries
            .get("output.path")
            .map(|e| PathBuf::from(&e.value)),
    };
    cfg.validate().map_err(to_validation)?;
    Ok(cfg)
}

fn angle(doc: &Doc, rad: &'static str, deg: &'static str) -> Result<f64> {
    match (doc.get(rad, parse_f64)?, doc.get(deg, parse_f64)?) {
        (Some(_), Some(_)) => Err(perr(doc.line_of(deg), deg, format!("conflicts with {rad}"))),
        (Some(r), None) => Ok(r),
        (None, Some(d)) => Ok(d.to_radians()),
        (None, None) => Ok(0.0),
    }
}

fn parse_trajectory(doc: &Doc, default: Trajectory) -> Result<Trajectory> {
    let kind = match doc.entries.get("trajectory.kind") {
        None => {
            let any = doc.entries.keys().any(|k| k.starts_with("trajectory."));
            if !any {
                return Ok(default);
            }
            return Err(perr(
                0,
                "trajectory.kind",
                "required when other trajectory keys are set",
            ));
        }
        Some(e) => (e.line, e.value.as_str()),
    };
    let allowed: &[&str] = match kind.1 {
        "circle" => &["trajectory.rho", "trajectory.omega"],
        "sigmoid_circle" => &[
            "trajectory.rho",
            "trajectory.center",
            "trajectory.a",
            "trajectory.b",
            "trajectory.c",
            "trajectory.t0",
        ],
        "hover" => &["trajectory.x_d"],
        "attitude" => &[
            "trajectory.roll",
            "trajectory.pitch",
            "trajectory.yaw",
            "trajectory.roll_deg",
            "trajectory.pitch_deg",
            "trajectory.yaw_deg",
        ],
        other => {
            return Err(perr(
                kind.0,
                "trajectory.kind",
                format!("expected circle, sigmoid_circle, hover or attitude, got '{other}'"),
            ))
        }
    };
    if let Some((k, e)) = doc.entries.iter().find(|(k, _)| {
        k.starts_with("trajectory.") && **k != "trajectory.kind" && !allowed.contains(k)
    }) {
        return Err(perr(
            e.line,
            k,
            format!("not used by trajectory kind '{}'", kind.1),
        ));
    }
    Ok(match kind.1 {
        "circle" => Trajectory::Circle {
            rho: doc.f64_or("trajectory.rho", 1.0)?,
            omega: doc.f64_or("trajectory.omega", 2.0)?,
        },
        "sigmoid_circle" => {
            let s = SigmoidCircle::default();
            Trajectory::SigmoidCircle(SigmoidCircle {
                rho: doc.f64_or("trajectory.rho", s.rho)?,
                center: doc.vec3_or("trajectory.center", s.center)?,
                a: doc.f64_or("trajectory.a", s.a)?,
                b: doc.f64_or("trajectory.b", s.b)?,
                c: doc.f64_or("trajectory.c", s.c)?,
                t0: doc.f64_or("trajectory.t0", s.t0)?,
            })
        }
        "hover" => Trajectory::Hover {
            x_d: doc.vec3_or("trajectory.x_d", Vec3::new(0.0, -1.0, 1.0))?,
        },
        _ => Trajectory::Attitude {
            roll: angle(doc, "trajectory.roll", "trajectory.roll_deg")?,
            pitch: angle(doc, "trajectory.pitch", "trajectory.pitch_deg")?,
            yaw: angle(doc, "trajectory.yaw", "trajectory.yaw_deg")?,
        },
    })
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn vec3(v: &Vec3) -> String {
    join(v.as_slice())
}

/// Compact when possible: one value for `x I`, three for a diagonal.
fn mat3(m: &Mat3) -> String {
    let diag = m.diagonal();
    if *m == Mat3::from_diagonal(&diag) {
        if diag.x == diag.y && diag.y == diag.z {
            return join(&[diag.x]);
        }
        return vec3(&diag);
    }
    let rows: Vec<f64> = (0..3)
        .flat_map(|i| (0..3).map(move |k| m[(i, k)]))
        .collect();
    join(&rows)
}

/// Writes every field, so that `parse_config(&serialize_config(c)) == c`.
pub fn serialize_config(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("controller", cfg.controller.name().to_string());
    kv("plant.m", format!("{:?}", cfg.m));
    kv("plant.J", mat3(&cfg.j));
    kv("plant.m_a", format!("{:?}", cfg.m_a));
    kv("plant.r", vec3(&cfg.r_arm));
    kv("plant.g", format!("{:?}", cfg.g));
    let g = &cfg.gains;
    for (k, v) in [
        ("gains.k_x", g.k_x),
        ("gains.k_v", g.k_v),
        ("gains.k_R", g.k_r),
        ("gains.k_Omega", g.k_omega),
        ("gains.k_R_hat", g.k_r_hat),
        ("gains.k_R_tilde", g.k_r_tilde),
        ("gains.k_Omega_tilde", g.k_omega_tilde),
        ("gains.k_I", g.k_i),
        ("gains.c", g.c),
    ] {
        kv(k, format!("{v:?}"));
    }
    kv("l1.gamma", mat3(cfg.l1.gamma()));
    kv("l1.a", format!("{:?}", cfg.l1.a));
    kv("l1.theta_max", format!("{:?}", cfg.l1.theta_max));
    kv("l1.eps_proj", format!("{:?}", cfg.l1.eps_proj));
    kv(
        "l1.ref_integrator",
        match cfg.l1.ref_integrator {
            RefIntegrator::Rk4 => "rk4",
            RefIntegrator::Euler => "euler",
        }
        .into(),
    );
    match cfg.trajectory {
        Trajectory::Circle { rho, omega } => {
            kv("trajectory.kind", "circle".into());
            kv("trajectory.rho", format!("{rho:?}"));
            kv("trajectory.omega", format!("{omega:?}"));
        }
        Trajectory::SigmoidCircle(s) => {
            kv("trajectory.kind", "sigmoid_circle".into());
            kv("trajectory.rho", format!("{:?}", s.rho));
            kv("trajectory.center", vec3(&s.center));
            kv("trajectory.a", format!("{:?}", s.a));
            kv("trajectory.b", format!("{:?}", s.b));
            kv("trajectory.c", format!("{:?}", s.c));
            kv("trajectory.t0", format!("{:?}", s.t0));
        }
        Trajectory::Hover { x_d } => {
            kv("trajectory.kind", "hover".into());
            kv("trajectory.x_d", vec3(&x_d));
        }
        Trajectory::Attitude { roll, pitch, yaw } => {
            kv("trajectory.kind", "attitude".into());
            kv("trajectory.roll", format!("{roll:?}"));
            kv("trajectory.pitch", format!("{pitch:?}"));
            kv("trajectory.yaw", format!("{yaw:?}"));
        }
    }
    for c in &cfg.disturbance.components {
        match c {
            Disturbance::Constant(v) => kv("disturbance.constant", vec3(v)),
            Disturbance::Harmonic { scale } => kv("disturbance.harmonic", vec3(scale)),
            Disturbance::AddedMass { m_a, r } => {
                kv("disturbance.added_mass", join(&[*m_a, r.x, r.y, r.z]))
            }
        }
    }
    let i = &cfg.init;
    kv("init.roll_deg", format!("{:?}", i.attitude_deg.x));
    kv("init.pitch_deg", format!("{:?}", i.attitude_deg.y));
    kv("init.yaw_deg", format!("{:?}", i.attitude_deg.z));
    kv("init.omega", vec3(&i.omega));
    kv("init.ref_roll_deg", format!("{:?}", i.ref_attitude_deg.x));
    kv("init.ref_pitch_deg", format!("{:?}", i.ref_attitude_deg.y));
    kv("init.ref_yaw_deg", format!("{:?}", i.ref_attitude_deg.z));
    kv("init.ref_omega", vec3(&i.ref_omega));
    kv("sim.dt", format!("{:?}", cfg.dt));
    kv("sim.duration", format!("{:?}", cfg.duration));
    kv("sim.log_dt", format!("{:?}", cfg.log_dt));
    kv(
        "sim.integrator",
        match cfg.integrator {
            AttitudeIntegrator::Rk4Reproject => "rk4_reproject",
            AttitudeIntegrator::LieRk4 => "lie_rk4",
        }
        .into(),
    );
    kv("sim.gate_override", cfg.gate_override.to_string());
    kv("sim.diagnostics", cfg.diagnostics.to_string());
    kv(
        "saturation.limit",
        cfg.saturation.map_or("none".into(), |l| format!("{l:?}")),
    );
    if let Some(p) = &cfg.output {
        kv("output.path", p.display().to_string());
    }
    out
}
