//! Base-motion and target profiles.

use std::cell::Cell;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::BaseMotionSource;
use crate::error::{IspError, Result};
use crate::frames::{Attitude, FrameId, RateVector};

const DEG: f64 = PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        v[self.index()] = 1.0;
        v
    }
}

/// One sinusoidal rate component about a base axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineComponent {
    pub axis: Axis,
    /// Peak rate, °/s.
    pub amplitude_deg_s: f64,
    pub frequency_hz: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

impl SineComponent {
    fn validate(&self, key: &str) -> Result<()> {
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return Err(IspError::config(format!("{key}.frequency_hz"), "must be > 0"));
        }
        if !self.amplitude_deg_s.is_finite() {
            return Err(IspError::config(format!("{key}.amplitude_deg_s"), "must be finite"));
        }
        if !self.phase_rad.is_finite() {
            return Err(IspError::config(format!("{key}.phase_rad"), "must be finite"));
        }
        Ok(())
    }

    fn omega(&self) -> f64 {
        2.0 * PI * self.frequency_hz
    }

    fn rate(&self, t: f64) -> Vector3<f64> {
        self.axis.unit() * (self.amplitude_deg_s * DEG * (self.omega() * t + self.phase_rad).sin())
    }

    fn rate_dot(&self, t: f64) -> Vector3<f64> {
        self.axis.unit() * (self.amplitude_deg_s * DEG * self.omega() * (self.omega() * t + self.phase_rad).cos())
    }
}

/// Base angular-rate profile, expressed in the base frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseMotionProfile {
    #[default]
    None,
    Sine {
        axis: Axis,
        amplitude_deg_s: f64,
        frequency_hz: f64,
        #[serde(default)]
        phase_rad: f64,
    },
    MultiSine {
        components: Vec<SineComponent>,
    },
    /// CSV with columns `t, wx, wy, wz` (s, rad/s), resolved against the
    /// scenario file's directory.
    Recorded {
        path: String,
    },
}

impl BaseMotionProfile {
    pub fn validate(&self, key: &str) -> Result<()> {
        match self {
            BaseMotionProfile::None => Ok(()),
            BaseMotionProfile::Sine { axis, amplitude_deg_s, frequency_hz, phase_rad } => SineComponent {
                axis: *axis,
                amplitude_deg_s: *amplitude_deg_s,
                frequency_hz: *frequency_hz,
                phase_rad: *phase_rad,
            }
            .validate(key),
            BaseMotionProfile::MultiSine { components } => {
                if components.is_empty() {
                    return Err(IspError::config(format!("{key}.components"), "must not be empty"));
                }
                for (i, c) in components.iter().enumerate() {
                    c.validate(&format!("{key}.components[{i}]"))?;
                }
                Ok(())
            }
            BaseMotionProfile::Recorded { path } => {
                if path.is_empty() {
                    return Err(IspError::config(format!("{key}.path"), "must not be empty"));
                }
                Ok(())
            }
        }
    }

    /// Builds the runtime source. Recorded files are loaded relative to `base_dir`.
    pub fn source(&self, base_dir: Option<&Path>) -> Result<BaseMotion> {
        let components = match self {
            BaseMotionProfile::None => Vec::new(),
            BaseMotionProfile::Sine { axis, amplitude_deg_s, frequency_hz, phase_rad } => vec![SineComponent {
                axis: *axis,
                amplitude_deg_s: *amplitude_deg_s,
                frequency_hz: *frequency_hz,
                phase_rad: *phase_rad,
            }],
            BaseMotionProfile::MultiSine { components } => components.clone(),
            BaseMotionProfile::Recorded { path } => {
                let full = match base_dir {
                    Some(d) => d.join(path),
                    None => Path::new(path).to_path_buf(),
                };
                let rec = RecordedMotion::from_csv_path(&full)?;
                return Ok(BaseMotion::Recorded(rec));
            }
        };
        Ok(BaseMotion::Sines(components))
    }
}

/// Zero-order-hold playback of recorded base rates.
#[derive(Debug, Clone)]
pub struct RecordedMotion {
    times: Vec<f64>,
    rates: Vec<Vector3<f64>>,
    exhausted_warned: Cell<bool>,
}

#[derive(Debug, Deserialize)]
struct RecordedRow {
    t: f64,
    wx: f64,
    wy: f64,
    wz: f64,
}

impl RecordedMotion {
    pub fn new(times: Vec<f64>, rates: Vec<Vector3<f64>>) -> Result<Self> {
        let key = "profiles.base.path";
        if times.is_empty() || times.len() != rates.len() {
            return Err(IspError::config(key, "recorded profile needs at least one sample"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(IspError::config(key, "sample times must be strictly increasing"));
        }
        if times.iter().any(|t| !t.is_finite()) || rates.iter().any(|r| !r.iter().all(|v| v.is_finite())) {
            return Err(IspError::config(key, "samples must be finite"));
        }
        Ok(Self {
            times,
            rates,
            exhausted_warned: Cell::new(false),
        })
    }

    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        let mut times = Vec::new();
        let mut rates = Vec::new();
        for row in rdr.deserialize::<RecordedRow>() {
            let r = row.map_err(|e| IspError::config("profiles.base.path", e.to_string()))?;
            times.push(r.t);
            rates.push(Vector3::new(r.wx, r.wy, r.wz));
        }
        Self::new(times, rates)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|e| IspError::config("profiles.base.path", format!("{}: {e}", path.display())))?;
        Self::from_reader(f)
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    /// True once a query has gone past the final sample.
    pub fn exhausted(&self) -> bool {
        self.exhausted_warned.get()
    }

    fn rate(&self, t: f64) -> Vector3<f64> {
        if t > self.end_time() {
            self.exhausted_warned.set(true);
        }
        let i = self.times.partition_point(|s| *s <= t);
        if i == 0 {
            Vector3::zeros()
        } else {
            self.rates[i - 1]
        }
    }
}

/// Runtime base-motion source.
#[derive(Debug, Clone)]
pub enum BaseMotion {
    Sines(Vec<SineComponent>),
    Recorded(RecordedMotion),
}

impl BaseMotion {
    /// Rate at `t` tagged as a base-frame vector.
    pub fn base_motion(&self, t: f64) -> RateVector {
        RateVector::from_vector(self.rate(t), FrameId::Base)
    }

    /// Warning text if a recorded profile ran out of samples.
    pub fn warning(&self) -> Option<String> {
        match self {
            BaseMotion::Recorded(r) if r.exhausted() => Some(format!(
                "recorded base motion ended at t = {} s; final sample held",
                r.end_time()
            )),
            _ => None,
        }
    }
}

impl BaseMotionSource for BaseMotion {
    fn rate(&self, t: f64) -> Vector3<f64> {
        match self {
            BaseMotion::Sines(c) => c.iter().map(|s| s.rate(t)).sum(),
            BaseMotion::Recorded(r) => r.rate(t),
        }
    }

    fn rate_dot(&self, t: f64) -> Vector3<f64> {
        match self {
            BaseMotion::Sines(c) => c.iter().map(|s| s.rate_dot(t)).sum(),
            // piecewise constant between samples
            BaseMotion::Recorded(_) => Vector3::zeros(),
        }
    }
}

/// Inertial target. Offsets are angles of the target from the platform's
/// initial boresight, in the same sense as positive yaw and pitch rotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetProfile {
    Fixed {
        #[serde(default)]
        yaw_offset_mrad: f64,
        #[serde(default)]
        pitch_offset_mrad: f64,
        /// Offsets apply from this time on; before it the target sits on the
        /// initial boresight.
        #[serde(default)]
        step_time_s: f64,
    },
    /// Rotates the initial direction about an inertial axis at a constant rate.
    Drift {
        rate_rad_s: f64,
        #[serde(default = "default_drift_axis")]
        axis: [f64; 3],
        #[serde(default)]
        yaw_offset_mrad: f64,
        #[serde(default)]
        pitch_offset_mrad: f64,
    },
}

fn default_drift_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl Default for TargetProfile {
    fn default() -> Self {
        TargetProfile::Fixed {
            yaw_offset_mrad: 0.0,
            pitch_offset_mrad: 0.0,
            step_time_s: 0.0,
        }
    }
}

/// Unit vector at the given yaw/pitch rotation from `+x` of a frame.
pub fn offset_direction(yaw: f64, pitch: f64) -> Vector3<f64> {
    Vector3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), -pitch.sin())
}

impl TargetProfile {
    pub fn validate(&self, key: &str) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(IspError::config(format!("{key}.{name}"), "must be finite"))
            }
        };
        match self {
            TargetProfile::Fixed { yaw_offset_mrad, pitch_offset_mrad, step_time_s } => {
                finite("yaw_offset_mrad", *yaw_offset_mrad)?;
                finite("pitch_offset_mrad", *pitch_offset_mrad)?;
                if !(step_time_s.is_finite() && *step_time_s >= 0.0) {
                    return Err(IspError::config(format!("{key}.step_time_s"), "must be >= 0"));
                }
            }
            TargetProfile::Drift { rate_rad_s, axis, yaw_offset_mrad, pitch_offset_mrad } => {
                finite("rate_rad_s", *rate_rad_s)?;
                finite("yaw_offset_mrad", *yaw_offset_mrad)?;
                finite("pitch_offset_mrad", *pitch_offset_mrad)?;
                let n = Vector3::from(*axis).norm();
                if !(n.is_finite() && n > 0.0) {
                    return Err(IspError::config(format!("{key}.axis"), "must be a non-zero vector"));
                }
            }
        }
        Ok(())
    }

    /// Target direction in I at `t`, given the platform attitude at t = 0.
    pub fn target_direction(&self, t: f64, initial_platform: &Attitude) -> Vector3<f64> {
        let d = match self {
            TargetProfile::Fixed { yaw_offset_mrad, pitch_offset_mrad, step_time_s } => {
                let (y, p) = if t >= *step_time_s {
                    (yaw_offset_mrad * 1e-3, pitch_offset_mrad * 1e-3)
                } else {
                    (0.0, 0.0)
                };
                initial_platform.body_to_inertial(&offset_direction(y, p))
            }
            TargetProfile::Drift { rate_rad_s, axis, yaw_offset_mrad, pitch_offset_mrad } => {
                let d0 = initial_platform
                    .body_to_inertial(&offset_direction(yaw_offset_mrad * 1e-3, pitch_offset_mrad * 1e-3));
                let ax = Unit::new_normalize(Vector3::from(*axis));
                UnitQuaternion::from_axis_angle(&ax, rate_rad_s * t) * d0
            }
        };
        d.normalize()
    }
}
