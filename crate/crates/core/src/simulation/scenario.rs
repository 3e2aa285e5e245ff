//! Scenario files.
//!
//! A scenario is a TOML document with the sections `run`, `initial`,
//! `bodies`, `friction`, `motors`, `sensors`, `camera`, `controllers` and
//! `profiles`. Only `run.duration_s` is mandatory; every other value falls
//! back to the library defaults. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actuation::MotorParams;
use crate::control::{ControllerForm, DiscreteCoefficients, LoopSpec};
use crate::dynamics::{Body, FrictionModel, GimbalPlant, InertiaTensor};
use crate::error::{IspError, Result};
use crate::sensing::{GyroModel, PotModel};
use crate::tracking::CameraModel;

use super::profiles::{BaseMotionProfile, TargetProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LoopMode {
    /// Cascade controllers drive the motors.
    #[default]
    ClosedLoop,
    /// Motors unpowered; the joints are free apart from friction and back-EMF.
    OpenLoop,
    /// Joints locked to the base.
    Caged,
}

fn default_dt() -> f64 {
    0.001
}

fn default_stabilization_rate() -> f64 {
    1000.0
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub duration_s: f64,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    #[serde(default)]
    pub seed: u64,
    /// Log every n-th integration step.
    #[serde(default = "one")]
    pub log_decimation: usize,
    #[serde(default = "default_stabilization_rate")]
    pub stabilization_rate_hz: f64,
    #[serde(default)]
    pub mode: LoopMode,
    /// Close the camera loop.
    #[serde(default = "yes")]
    pub tracking: bool,
    /// Apply the configured sensor noise and bias; off makes both sensors ideal
    /// apart from quantization.
    #[serde(default = "yes")]
    pub sensor_noise: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub psi_deg: f64,
    pub theta_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InertiaConfig {
    pub ixx: f64,
    pub iyy: f64,
    pub izz: f64,
}

impl InertiaConfig {
    fn from_tensor(t: InertiaTensor) -> Self {
        Self { ixx: t.ixx, iyy: t.iyy, izz: t.izz }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodiesConfig {
    pub platform: InertiaConfig,
    pub gimbal: InertiaConfig,
}

impl Default for BodiesConfig {
    fn default() -> Self {
        Self {
            platform: InertiaConfig::from_tensor(InertiaTensor::modeller_platform()),
            gimbal: InertiaConfig::from_tensor(InertiaTensor::default_gimbal()),
        }
    }
}

/// A per-joint setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct JointPair<T: Default> {
    pub yaw: T,
    pub pitch: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SensorsConfig {
    pub gyro: GyroModel,
    pub pot: PotModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisControllers {
    pub stabilization: DiscreteCoefficients,
    pub tracking: DiscreteCoefficients,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSpecs {
    pub stabilization: LoopSpec,
    pub tracking: LoopSpec,
}

impl Default for DesignSpecs {
    fn default() -> Self {
        Self {
            stabilization: LoopSpec {
                bandwidth_hz: 38.0,
                max_resonance_db: 3.0,
                pole_hz: Some(150.0),
                form: ControllerForm::PI,
            },
            tracking: LoopSpec {
                bandwidth_hz: 1.0,
                max_resonance_db: 0.5,
                pole_hz: Some(10.0),
                form: ControllerForm::P,
            },
        }
    }
}

fn default_rate_limit() -> f64 {
    GyroModel::default().full_scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllersConfig {
    #[serde(default = "yes")]
    pub anti_windup: bool,
    /// Clamp on the tracking-loop rate command, rad/s.
    #[serde(default = "default_rate_limit")]
    pub rate_command_limit: f64,
    #[serde(default)]
    pub design: DesignSpecs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw: Option<AxisControllers>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch: Option<AxisControllers>,
}

impl Default for ControllersConfig {
    fn default() -> Self {
        Self {
            anti_windup: true,
            rate_command_limit: default_rate_limit(),
            design: DesignSpecs::default(),
            yaw: None,
            pitch: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ProfilesConfig {
    pub base: BaseMotionProfile,
    pub target: TargetProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub run: RunConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub bodies: BodiesConfig,
    /// Defaults to the calibrated bench friction. A joint section that is
    /// given replaces that joint's entry, with missing fields taken from
    /// `FrictionModel::default()`.
    #[serde(default = "bench_friction")]
    pub friction: JointPair<FrictionModel>,
    #[serde(default)]
    pub motors: JointPair<MotorParams>,
    #[serde(default)]
    pub sensors: SensorsConfig,
    #[serde(default)]
    pub camera: CameraModel,
    #[serde(default)]
    pub controllers: ControllersConfig,
    #[serde(default)]
    pub profiles: ProfilesConfig,
    /// Directory that relative paths in the file resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// Joint friction that reproduces the measured residual rates of the
/// worst-case base motion test.
pub fn bench_friction() -> JointPair<FrictionModel> {
    JointPair {
        yaw: FrictionModel {
            coulomb: 0.058,
            ..FrictionModel::default()
        },
        pitch: FrictionModel {
            coulomb: 0.025,
            ..FrictionModel::default()
        },
    }
}

/// `period / dt` as an integer, or `None` when it is not one.
fn ticks(period: f64, dt: f64) -> Option<usize> {
    let r = period / dt;
    let n = r.round();
    if n >= 1.0 && (r - n).abs() <= 1e-6 * n {
        Some(n as usize)
    } else {
        None
    }
}

impl Scenario {
    /// A quiet scenario with default hardware: no motion, no target offset.
    pub fn quiet(duration_s: f64) -> Self {
        Self {
            name: String::new(),
            description: String::new(),
            run: RunConfig {
                duration_s,
                dt_s: default_dt(),
                seed: 0,
                log_decimation: 1,
                stabilization_rate_hz: default_stabilization_rate(),
                mode: LoopMode::ClosedLoop,
                tracking: true,
                sensor_noise: true,
            },
            initial: InitialConfig::default(),
            bodies: BodiesConfig::default(),
            friction: bench_friction(),
            motors: JointPair::default(),
            sensors: SensorsConfig::default(),
            camera: CameraModel::default(),
            controllers: ControllersConfig::default(),
            profiles: ProfilesConfig::default(),
            base_dir: None,
        }
    }

    /// Parses and validates everything except the presence of designed
    /// controller coefficients, which [`Scenario::validate`] also requires.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text).map_err(|e| IspError::Parse(e.to_string().trim_end().to_string()))?;
        sc.validate_for_design()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| IspError::Parse(format!("cannot read {}: {e}", path.display())))?;
        let mut sc = Self::from_toml_str(&text)?;
        sc.base_dir = path.parent().map(Path::to_path_buf);
        Ok(sc)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| IspError::Parse(e.to_string()))
    }

    /// Full check for running: [`Scenario::validate_for_design`] plus designed
    /// coefficients for closed-loop runs.
    pub fn validate(&self) -> Result<()> {
        self.validate_for_design()?;
        if self.run.mode == LoopMode::ClosedLoop {
            for (name, axis) in [("yaw", &self.controllers.yaw), ("pitch", &self.controllers.pitch)] {
                if axis.is_none() {
                    return Err(IspError::config(
                        format!("controllers.{name}"),
                        "closed-loop runs need designed coefficients (run `isp design`)",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn validate_for_design(&self) -> Result<()> {
        let r = &self.run;
        if !(r.duration_s.is_finite() && r.duration_s > 0.0) {
            return Err(IspError::config("run.duration_s", "must be > 0"));
        }
        if !(r.dt_s.is_finite() && r.dt_s > 0.0) {
            return Err(IspError::config("run.dt_s", "must be > 0"));
        }
        if r.log_decimation == 0 {
            return Err(IspError::config("run.log_decimation", "must be >= 1"));
        }
        if !(r.stabilization_rate_hz.is_finite() && r.stabilization_rate_hz > 0.0) {
            return Err(IspError::config("run.stabilization_rate_hz", "must be > 0"));
        }
        if ticks(1.0 / r.stabilization_rate_hz, r.dt_s).is_none() {
            return Err(IspError::config(
                "run.stabilization_rate_hz",
                "stabilization period must be a whole number of dt_s steps",
            ));
        }
        for (k, v) in [("initial.psi_deg", self.initial.psi_deg), ("initial.theta_deg", self.initial.theta_deg)] {
            if !v.is_finite() {
                return Err(IspError::config(k, "must be finite"));
            }
        }
        self.inertia(Body::Platform)?;
        self.inertia(Body::Gimbal)?;
        self.friction.yaw.validate("friction.yaw")?;
        self.friction.pitch.validate("friction.pitch")?;
        self.motors.yaw.validate("motors.yaw")?;
        self.motors.pitch.validate("motors.pitch")?;
        self.sensors.gyro.validate("sensors.gyro")?;
        self.sensors.pot.validate("sensors.pot")?;
        self.camera.validate("camera")?;
        if ticks(self.camera.frame_period(), r.dt_s).is_none() {
            return Err(IspError::config("camera.frame_rate", "frame period must be a whole number of dt_s steps"));
        }
        let c = &self.controllers;
        if !(c.rate_command_limit.is_finite() && c.rate_command_limit > 0.0) {
            return Err(IspError::config("controllers.rate_command_limit", "must be > 0"));
        }
        c.design.stabilization.validate("controllers.design.stabilization")?;
        c.design.tracking.validate("controllers.design.tracking")?;
        for (name, axis) in [("yaw", &c.yaw), ("pitch", &c.pitch)] {
            if let Some(a) = axis {
                let key = format!("controllers.{name}.stabilization");
                a.stabilization.validate(&key)?;
                if ticks(a.stabilization.sample_period, 1.0 / r.stabilization_rate_hz) != Some(1) {
                    return Err(IspError::config(
                        format!("{key}.sample_period"),
                        "must equal 1 / run.stabilization_rate_hz",
                    ));
                }
                let key = format!("controllers.{name}.tracking");
                a.tracking.validate(&key)?;
                if ticks(a.tracking.sample_period, self.camera.frame_period()) != Some(1) {
                    return Err(IspError::config(format!("{key}.sample_period"), "must equal 1 / camera.frame_rate"));
                }
            }
        }
        self.profiles.base.validate("profiles.base")?;
        self.profiles.target.validate("profiles.target")?;
        Ok(())
    }

    pub fn inertia(&self, body: Body) -> Result<InertiaTensor> {
        let c = match body {
            Body::Platform => self.bodies.platform,
            Body::Gimbal => self.bodies.gimbal,
        };
        InertiaTensor::new(c.ixx, c.iyy, c.izz, body)
    }

    pub fn plant(&self) -> Result<GimbalPlant> {
        Ok(GimbalPlant {
            platform: self.inertia(Body::Platform)?,
            gimbal: self.inertia(Body::Gimbal)?,
            yaw_friction: self.friction.yaw,
            pitch_friction: self.friction.pitch,
            yaw_motor: self.motors.yaw,
            pitch_motor: self.motors.pitch,
            caged: self.run.mode == LoopMode::Caged,
        })
    }

    /// Integration steps in the run.
    pub fn steps(&self) -> usize {
        (self.run.duration_s / self.run.dt_s).round() as usize
    }

    pub fn stabilization_ticks(&self) -> usize {
        ticks(1.0 / self.run.stabilization_rate_hz, self.run.dt_s).expect("validated")
    }

    pub fn frame_ticks(&self) -> usize {
        ticks(self.camera.frame_period(), self.run.dt_s).expect("validated")
    }

    /// Gyro model actually used, honouring `run.sensor_noise`.
    pub fn effective_gyro(&self) -> GyroModel {
        let mut g = self.sensors.gyro.clone();
        if !self.run.sensor_noise {
            g.noise_std = 0.0;
            g.bias = [0.0; 3];
        }
        g
    }

    pub fn effective_pot(&self) -> PotModel {
        let mut p = self.sensors.pot.clone();
        if !self.run.sensor_noise {
            p.noise_std = 0.0;
        }
        p
    }
}
