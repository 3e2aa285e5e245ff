//! Target tracker geometry and camera model.
//!
//! The platform boresight is `+x_p`. A target's yaw error is its azimuth
//! about `z_p` (positive toward `+y_p`) and its pitch error its elevation
//! toward `+z_p`, both in milliradians.

mod centroid;
mod pgm;

pub use centroid::{detect_centroid, detect_centroid_raw, render_disk, Centroid, SyntheticFrame};
pub use pgm::{read_pgm, write_pgm};

use std::collections::VecDeque;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{IspError, Result};
use crate::frames::Attitude;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DetectionMode {
    /// Project the true tracking error straight to pixels.
    #[default]
    Geometric,
    /// Render a disk target into a frame and run centroid detection on it.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraModel {
    /// mrad per pixel.
    pub pixel_scale: f64,
    pub width: usize,
    pub height: usize,
    pub frame_rate: f64,
    /// Image-processing latency, s.
    pub processing_delay: f64,
    #[serde(default)]
    pub detection: DetectionMode,
    /// Binarisation threshold for synthetic frames.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Angular radius of the rendered target, mrad.
    #[serde(default = "default_target_radius")]
    pub target_radius: f64,
}

fn default_threshold() -> f64 {
    0.5
}

fn default_target_radius() -> f64 {
    4.5
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            pixel_scale: 0.5,
            width: 640,
            height: 480,
            frame_rate: 20.0,
            processing_delay: 0.2,
            detection: DetectionMode::Geometric,
            threshold: default_threshold(),
            target_radius: default_target_radius(),
        }
    }
}

impl CameraModel {
    pub fn validate(&self, key: &str) -> Result<()> {
        if !(self.pixel_scale.is_finite() && self.pixel_scale > 0.0) {
            return Err(IspError::config(format!("{key}.pixel_scale"), "must be > 0"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(IspError::config(format!("{key}.width"), "resolution must be non-zero"));
        }
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return Err(IspError::config(format!("{key}.frame_rate"), "must be > 0"));
        }
        if !(self.processing_delay.is_finite() && self.processing_delay >= 0.0) {
            return Err(IspError::config(format!("{key}.processing_delay"), "must be >= 0"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(IspError::config(format!("{key}.threshold"), "must lie in (0, 1)"));
        }
        if !(self.target_radius.is_finite() && self.target_radius > 0.0) {
            return Err(IspError::config(format!("{key}.target_radius"), "must be > 0"));
        }
        Ok(())
    }

    pub fn frame_period(&self) -> f64 {
        1.0 / self.frame_rate
    }

    /// Half-extent of the field of view, mrad, as (yaw, pitch).
    pub fn half_fov(&self) -> (f64, f64) {
        (
            0.5 * self.width as f64 * self.pixel_scale,
            0.5 * self.height as f64 * self.pixel_scale,
        )
    }
}

/// Centroid position in pixels, origin at the image centre, `u` along yaw
/// error and `v` along pitch error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
}

/// Angular tracking error, mrad.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackingError {
    pub yaw: f64,
    pub pitch: f64,
}

impl TrackingError {
    pub fn new(yaw: f64, pitch: f64) -> Self {
        Self { yaw, pitch }
    }
}

/// Why a target could not be measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetLost {
    /// Boresight component non-positive.
    BehindPlatform,
}

/// Tracking error of an inertial target direction seen from the platform.
pub fn tracking_error(
    target_dir: &Vector3<f64>,
    platform_attitude: &Attitude,
) -> std::result::Result<TrackingError, TargetLost> {
    debug_assert!((target_dir.norm() - 1.0).abs() < 1e-9, "target direction must be unit length");
    let t = platform_attitude.inertial_to_body(target_dir);
    // the FOV hemisphere boundary is excluded; allow for round-off in x
    if t.x <= 1e-12 {
        return Err(TargetLost::BehindPlatform);
    }
    Ok(TrackingError {
        yaw: t.y.atan2(t.x) * 1e3,
        pitch: t.z.atan2(t.x) * 1e3,
    })
}

/// Rounds to the nearest integer with exact halves going toward zero, so a
/// centroid sitting on a pixel boundary is not resolved. Halves are detected
/// within 1e-9 px to absorb round-off from the angle computation.
pub fn round_half_toward_zero(x: f64) -> f64 {
    let frac = x.abs().fract();
    if (frac - 0.5).abs() <= 1e-9 {
        x.trunc()
    } else {
        x.round()
    }
}

/// Projects an angular error onto the pixel grid; `None` when the target
/// falls outside the image.
pub fn project_to_pixels(err: &TrackingError, model: &CameraModel) -> Option<PixelCoord> {
    let u = round_half_toward_zero(err.yaw / model.pixel_scale);
    let v = round_half_toward_zero(err.pitch / model.pixel_scale);
    if u.abs() > model.width as f64 / 2.0 || v.abs() > model.height as f64 / 2.0 {
        return None;
    }
    Some(PixelCoord { u, v })
}

/// Inverse of the camera mapping.
pub fn pixel_to_error(px: &PixelCoord, model: &CameraModel) -> TrackingError {
    TrackingError {
        yaw: px.u * model.pixel_scale,
        pitch: px.v * model.pixel_scale,
    }
}

/// A camera frame result that has cleared the processing pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraMeasurement {
    pub capture_time: f64,
    pub available_time: f64,
    pub pixel: Option<PixelCoord>,
}

/// Camera with its processing-delay queue.
#[derive(Debug, Clone)]
pub struct Camera {
    model: CameraModel,
    queue: VecDeque<CameraMeasurement>,
    last_delivered: Option<f64>,
}

impl Camera {
    pub fn new(model: CameraModel) -> Self {
        Self {
            model,
            queue: VecDeque::new(),
            last_delivered: None,
        }
    }

    pub fn model(&self) -> &CameraModel {
        &self.model
    }

    /// Captures a frame at `sim_time`. `err` is `None` when the target is not
    /// in front of the platform.
    pub fn camera_measure(&mut self, err: Option<TrackingError>, sim_time: f64) {
        let pixel = err.and_then(|e| project_to_pixels(&e, &self.model));
        self.push(pixel, sim_time);
    }

    /// Captures a frame whose detection result was computed externally, e.g.
    /// from a rendered synthetic frame.
    pub fn push(&mut self, pixel: Option<PixelCoord>, sim_time: f64) {
        self.queue.push_back(CameraMeasurement {
            capture_time: sim_time,
            available_time: sim_time + self.model.processing_delay,
            pixel,
        });
    }

    /// Newest measurement whose processing has completed by `now`, if it has
    /// not been delivered before. Older completed frames are discarded.
    pub fn poll(&mut self, now: f64) -> Option<CameraMeasurement> {
        // tolerate accumulated time round-off
        let eps = 1e-9;
        let mut newest = None;
        while let Some(front) = self.queue.front() {
            if front.available_time <= now + eps {
                newest = self.queue.pop_front();
            } else {
                break;
            }
        }
        match newest {
            Some(m) if self.last_delivered != Some(m.capture_time) => {
                self.last_delivered = Some(m.capture_time);
                Some(m)
            }
            _ => None,
        }
    }
}
