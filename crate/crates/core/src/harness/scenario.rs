//! Declarative scenario description and the experiment presets.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::controllers::Gains;
use crate::disturbances::{Disturbance, DisturbanceSpec};
use crate::error::{Error, Result};
use crate::l1::L1Params;
use crate::rigid_body::{added_mass_inertia, AttitudeIntegrator, PlantParams, GRAVITY};
use crate::so3::{Mat3, RotationMatrix, Vec3};
use crate::trajectories::Trajectory;

/// Default integration step, s.
///
/// The adaptation loop formed by the reference model and `theta_hat` has a
/// natural frequency near `sqrt(Gamma / J)`, about 1.2e4 rad/s with the
/// default gains; explicit updates need `omega dt` well below 2.
pub const DEFAULT_DT: f64 = 5e-5;

/// Default spacing of logged records, s.
pub const DEFAULT_LOG_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ControllerKind {
    #[default]
    GeoL1,
    GeoPd,
    GeoPid,
    EulerL1,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] = [
        ControllerKind::GeoL1,
        ControllerKind::GeoPd,
        ControllerKind::GeoPid,
        ControllerKind::EulerL1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::GeoL1 => "geo-l1",
            ControllerKind::GeoPd => "geo-pd",
            ControllerKind::GeoPid => "geo-pid",
            ControllerKind::EulerL1 => "euler-l1",
        }
    }

    pub fn is_l1(self) -> bool {
        matches!(self, ControllerKind::GeoL1 | ControllerKind::EulerL1)
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ControllerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown controller '{s}'")))
    }
}

/// Initial attitudes of the vehicle and of the reference model as ZYX Euler
/// angles `[roll, pitch, yaw]` in degrees, and their body rates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InitialConditions {
    pub attitude_deg: Vec3,
    pub omega: Vec3,
    pub ref_attitude_deg: Vec3,
    pub ref_omega: Vec3,
}

fn from_degrees(eta: &Vec3) -> RotationMatrix {
    RotationMatrix::from_euler_zyx(eta.x.to_radians(), eta.y.to_radians(), eta.z.to_radians())
}

impl InitialConditions {
    pub fn rotation(&self) -> RotationMatrix {
        from_degrees(&self.attitude_deg)
    }

    pub fn ref_rotation(&self) -> RotationMatrix {
        from_degrees(&self.ref_attitude_deg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub m: f64,
    /// Nominal inertia known to the controller.
    pub j: Mat3,
    /// Unmodelled point mass; adds inertia and a gravity moment.
    pub m_a: f64,
    pub r_arm: Vec3,
    pub g: f64,
    pub controller: ControllerKind,
    pub gains: Gains,
    pub l1: L1Params,
    pub trajectory: Trajectory,
    /// External moments; the added-mass moment is appended at run time.
    pub disturbance: DisturbanceSpec,
    pub init: InitialConditions,
    pub dt: f64,
    pub duration: f64,
    pub log_dt: f64,
    pub integrator: AttitudeIntegrator,
    /// Per-axis moment limit, N m.
    pub saturation: Option<f64>,
    /// Run even if the initial conditions violate the stability gate.
    pub gate_override: bool,
    /// Track the Lyapunov function at every step.
    pub diagnostics: bool,
    pub output: Option<PathBuf>,
}

pub fn nominal_inertia() -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(6.968e-3, 6.211e-3, 10.34e-3))
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let j = nominal_inertia();
        Self {
            m: 1.129,
            j,
            m_a: 0.0,
            r_arm: Vec3::new(0.2, 0.2, 0.2),
            g: GRAVITY,
            controller: ControllerKind::GeoL1,
            gains: Gains::defaults(&j).expect("default gains are valid"),
            l1: L1Params::defaults(),
            trajectory: Trajectory::Circle {
                rho: 1.0,
                omega: 2.0,
            },
            disturbance: DisturbanceSpec::none(),
            init: InitialConditions::default(),
            dt: DEFAULT_DT,
            duration: 10.0,
            log_dt: DEFAULT_LOG_DT,
            integrator: AttitudeIntegrator::Rk4Reproject,
            saturation: None,
            gate_override: false,
            diagnostics: true,
            output: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sim.dt", self.dt),
            ("sim.duration", self.duration),
            ("sim.log_dt", self.log_dt),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{k} must be positive, got {v}")));
            }
        }
        if self.dt > self.duration {
            return Err(Error::Validation("sim.dt exceeds sim.duration".into()));
        }
        if let Some(l) = self.saturation {
            if !(l > 0.0) {
                return Err(Error::Validation(format!(
                    "saturation.limit must be positive, got {l}"
                )));
            }
        }
        if self.m_a < 0.0 || self.m_a.is_nan() {
            return Err(Error::NegativeMass(self.m_a));
        }
        self.plant()?;
        self.gains.validate(&self.j)?;
        DisturbanceSpec::new(self.disturbance.components.clone())?;
        Ok(())
    }

    /// Plant parameters with the true inertia `J + J_ma`.
    pub fn plant(&self) -> Result<PlantParams> {
        let j_bar = self.j + added_mass_inertia(self.m_a, &self.r_arm)?;
        PlantParams::new(self.m, self.j, j_bar, self.g)
    }

    /// External disturbance plus the gravity moment of the added mass.
    pub fn full_disturbance(&self) -> DisturbanceSpec {
        let mut comps = self.disturbance.components.clone();
        if self.m_a > 0.0 {
            comps.push(Disturbance::AddedMass {
                m_a: self.m_a,
                r: self.r_arm,
            });
        }
        DisturbanceSpec { components: comps }
    }

    pub fn n_steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn log_every(&self) -> usize {
        ((self.log_dt / self.dt).round() as usize).max(1)
    }

    pub fn with_controller(mut self, controller: ControllerKind) -> Self {
        self.controller = controller;
        self
    }
}

/// Constant body-frame disturbance of the first circular-trajectory case.
pub const CASE1_THETA_T: [f64; 3] = [0.95, 0.25, -0.5];

/// Circle tracking with a constant disturbance, an added mass, and the
/// vehicle starting almost upside down.
pub fn case1(controller: ControllerKind) -> ScenarioConfig {
    ScenarioConfig {
        controller,
        m_a: 0.5,
        disturbance: DisturbanceSpec {
            components: vec![Disturbance::Constant(Vec3::from(CASE1_THETA_T))],
        },
        init: InitialConditions {
            attitude_deg: Vec3::new(178.0, 0.0, 0.0),
            ..Default::default()
        },
        duration: 10.0,
        ..Default::default()
    }
}

/// Circle tracking with the multi-tone disturbance on every axis and an
/// added mass, starting close to the desired attitude.
pub fn case2(controller: ControllerKind) -> ScenarioConfig {
    ScenarioConfig {
        controller,
        m_a: 0.5,
        disturbance: DisturbanceSpec {
            components: vec![Disturbance::Harmonic {
                scale: Vec3::new(1.0, 1.0, 1.0),
            }],
        },
        init: InitialConditions {
            ref_attitude_deg: Vec3::new(10.0, 0.0, 0.0),
            ..Default::default()
        },
        duration: 10.0,
        ..Default::default()
    }
}

/// Attitude step to 30/30/30 degrees with an added mass and the multi-tone
/// disturbance.
pub fn step_scenario(controller: ControllerKind, saturation: Option<f64>) -> ScenarioConfig {
    let a = 30f64.to_radians();
    ScenarioConfig {
        controller,
        m_a: 0.5,
        disturbance: DisturbanceSpec {
            components: vec![Disturbance::Harmonic {
                scale: Vec3::new(1.0, 1.0, 1.0),
            }],
        },
        trajectory: Trajectory::Attitude {
            roll: a,
            pitch: a,
            yaw: a,
        },
        saturation,
        duration: 5.0,
        ..Default::default()
    }
}

/// One point of the initial-roll sweep: desired attitude at identity,
/// true and reference model rolled by the given angles in degrees.
pub fn sweep_point(
    controller: ControllerKind,
    phi_hat0_deg: f64,
    phi0_deg: f64,
    m_a: f64,
) -> ScenarioConfig {
    ScenarioConfig {
        controller,
        m_a,
        trajectory: Trajectory::Attitude {
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
        },
        init: InitialConditions {
            attitude_deg: Vec3::new(phi0_deg, 0.0, 0.0),
            ref_attitude_deg: Vec3::new(phi_hat0_deg, 0.0, 0.0),
            ..Default::default()
        },
        duration: 3.0,
        log_dt: 3.0,
        diagnostics: false,
        ..Default::default()
    }
}
