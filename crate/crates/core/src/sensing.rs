//! Gyro and potentiometer measurement models.
//!
//! Every sensor owns a [`NoiseStream`] derived from the master seed and the
//! sensor's name, so toggling one sensor's noise never shifts another's
//! sequence.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{IspError, Result};
use crate::frames::{wrap_angle, RateVector};

const DEG: f64 = std::f64::consts::PI / 180.0;

/// Named, seeded Gaussian source.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

/// FNV-1a; stable across platforms and toolchains.
fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl NoiseStream {
    pub fn new(master_seed: u64, name: &str) -> Self {
        let seed = master_seed ^ fnv1a(name).rotate_left(17);
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// One draw from N(0, std²). A zero std consumes nothing.
    pub fn gaussian(&mut self, std: f64) -> f64 {
        if std == 0.0 {
            return 0.0;
        }
        let z: f64 = StandardNormal.sample(&mut self.rng);
        std * z
    }
}

/// Rounds to the nearest multiple of `step`, halves away from zero.
/// A non-positive step disables quantization.
pub fn quantize(value: f64, step: f64) -> f64 {
    if step > 0.0 {
        (value / step).round() * step
    } else {
        value
    }
}

/// MEMS rate gyro on the platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GyroModel {
    /// ±full scale, rad/s.
    pub full_scale: f64,
    pub sample_rate: f64,
    /// White noise per sample, rad/s.
    pub noise_std: f64,
    /// Per-axis constant bias, rad/s.
    pub bias: [f64; 3],
    /// Output LSB, rad/s; 0 disables quantization.
    pub quantization_step: f64,
}

impl Default for GyroModel {
    /// ±250 °/s range at 1 kHz. Noise, bias and LSB are representative MEMS
    /// figures (0.02 °/s per sample, 0.05 °/s, 16-bit over the range).
    fn default() -> Self {
        Self {
            full_scale: 250.0 * DEG,
            sample_rate: 1000.0,
            noise_std: 0.02 * DEG,
            bias: [0.05 * DEG; 3],
            quantization_step: 250.0 * DEG / 32768.0,
        }
    }
}

impl GyroModel {
    pub fn ideal() -> Self {
        Self {
            noise_std: 0.0,
            bias: [0.0; 3],
            quantization_step: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        if !(self.full_scale.is_finite() && self.full_scale > 0.0) {
            return Err(IspError::config(format!("{key}.full_scale"), "must be > 0"));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(IspError::config(format!("{key}.sample_rate"), "must be > 0"));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(IspError::config(format!("{key}.noise_std"), "must be >= 0"));
        }
        if !(self.quantization_step.is_finite() && self.quantization_step >= 0.0) {
            return Err(IspError::config(format!("{key}.quantization_step"), "must be >= 0"));
        }
        if self.bias.iter().any(|b| !b.is_finite()) {
            return Err(IspError::config(format!("{key}.bias"), "must be finite"));
        }
        Ok(())
    }
}

/// One gyro reading: per axis, bias and noise are added, the result clamped
/// to full scale and then quantized. The output keeps the input's frame tag.
pub fn gyro_sample(true_rate: &RateVector, model: &GyroModel, rng: &mut NoiseStream) -> RateVector {
    let mut out = Vector3::zeros();
    for i in 0..3 {
        let raw = true_rate.omega[i] + model.bias[i] + rng.gaussian(model.noise_std);
        let clamped = raw.clamp(-model.full_scale, model.full_scale);
        // quantization can round up past full scale by at most half an LSB
        out[i] = quantize(clamped, model.quantization_step).clamp(-model.full_scale, model.full_scale);
    }
    RateVector::from_vector(out, true_rate.frame)
}

/// Continuous-rotation potentiometer on a gimbal joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotModel {
    /// rad
    pub noise_std: f64,
    /// ADC resolution, rad.
    pub quantization_step: f64,
    #[serde(default = "default_true")]
    pub continuous_rotation: bool,
}

fn default_true() -> bool {
    true
}

impl Default for PotModel {
    /// 12-bit over a full turn.
    fn default() -> Self {
        Self {
            noise_std: 0.0005,
            quantization_step: 2.0 * std::f64::consts::PI / 4096.0,
            continuous_rotation: true,
        }
    }
}

impl PotModel {
    pub fn validate(&self, key: &str) -> Result<()> {
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(IspError::config(format!("{key}.noise_std"), "must be >= 0"));
        }
        if !(self.quantization_step.is_finite() && self.quantization_step > 0.0) {
            return Err(IspError::config(format!("{key}.quantization_step"), "must be > 0"));
        }
        Ok(())
    }
}

/// Angle reading: noise added, wrapped to (-pi, pi], then quantized with
/// halves rounded away from zero.
pub fn pot_sample(true_angle: f64, model: &PotModel, rng: &mut NoiseStream) -> f64 {
    let noisy = wrap_angle(true_angle + rng.gaussian(model.noise_std));
    wrap_angle(quantize(noisy, model.quantization_step))
}
