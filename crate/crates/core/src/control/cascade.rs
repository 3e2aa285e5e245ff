use crate::error::Result;
use crate::frames::RateVector;
use crate::tracking::TrackingError;

use super::discrete::DiscreteController;

/// Outer tracking loop feeding an inner rate loop for one gimbal axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisCascade {
    pub tracking: DiscreteController,
    pub stabilization: DiscreteController,
    rate_cmd: f64,
}

impl AxisCascade {
    pub fn new(tracking: DiscreteController, stabilization: DiscreteController) -> Self {
        Self {
            tracking,
            stabilization,
            rate_cmd: 0.0,
        }
    }

    /// Held output of the tracking loop, rad/s.
    pub fn rate_command(&self) -> f64 {
        self.rate_cmd
    }

    /// Feeds a fresh camera error (rad) to the tracking loop.
    pub fn track(&mut self, error: f64) -> Result<f64> {
        self.rate_cmd = self.tracking.update(error)?;
        Ok(self.rate_cmd)
    }

    /// One rate-loop tick; returns the motor voltage.
    pub fn stabilize(&mut self, measured_rate: f64) -> Result<f64> {
        self.stabilization.update(self.rate_cmd - measured_rate)
    }

    pub fn reset(&mut self) {
        self.tracking.reset();
        self.stabilization.reset();
        self.rate_cmd = 0.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CascadeOutput {
    /// Rate commands about y_p and z_p, rad/s.
    pub rate_cmd_y: f64,
    pub rate_cmd_z: f64,
    pub v_yaw: f64,
    pub v_pitch: f64,
}

/// One stabilization tick for both axes. `track_err` is a fresh camera
/// measurement or `None` (no new frame, or no detection), in which case the
/// previous rate commands are held.
///
/// The yaw loop regulates the platform z rate, the pitch loop the platform y
/// rate. A positive pitch rotation moves the boresight toward −z, so the
/// pitch tracking loop is fed the negated image error.
pub fn cascade_update(
    track_err: Option<&TrackingError>,
    gyro: &RateVector,
    yaw: &mut AxisCascade,
    pitch: &mut AxisCascade,
) -> Result<CascadeOutput> {
    if let Some(e) = track_err {
        yaw.track(e.yaw * 1e-3)?;
        pitch.track(-e.pitch * 1e-3)?;
    }
    let v_yaw = yaw.stabilize(gyro.z())?;
    let v_pitch = pitch.stabilize(gyro.y())?;
    Ok(CascadeOutput {
        rate_cmd_y: pitch.rate_command(),
        rate_cmd_z: yaw.rate_command(),
        v_yaw,
        v_pitch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{tustin_discretize, TransferFunction};
    use crate::frames::FrameId;

    fn axis() -> AxisCascade {
        let pi = TransferFunction::new(vec![90.0, 2000.0], vec![1.0, 0.0]).unwrap();
        let stab = DiscreteController::with_symmetric_limit(tustin_discretize(&pi, 0.001).unwrap(), 24.0, true).unwrap();
        let trk = DiscreteController::with_symmetric_limit(
            tustin_discretize(&TransferFunction::first_order_lag(62.8).scale(2.0), 0.05).unwrap(),
            4.36,
            true,
        )
        .unwrap();
        AxisCascade::new(trk, stab)
    }

    #[test]
    fn zero_in_zero_out() {
        let (mut y, mut p) = (axis(), axis());
        let out = cascade_update(
            Some(&TrackingError::new(0.0, 0.0)),
            &RateVector::zero(FrameId::Platform),
            &mut y,
            &mut p,
        )
        .unwrap();
        assert_eq!(out, CascadeOutput::default());
    }

    #[test]
    fn rate_command_is_held_without_camera_data() {
        let (mut y, mut p) = (axis(), axis());
        let g = RateVector::zero(FrameId::Platform);
        let first = cascade_update(Some(&TrackingError::new(10.0, -5.0)), &g, &mut y, &mut p).unwrap();
        assert!(first.rate_cmd_z > 0.0 && first.rate_cmd_y > 0.0);
        for _ in 0..10 {
            let o = cascade_update(None, &g, &mut y, &mut p).unwrap();
            assert_eq!(o.rate_cmd_z, first.rate_cmd_z);
            assert_eq!(o.rate_cmd_y, first.rate_cmd_y);
        }
    }

    #[test]
    fn measured_rate_opposes_voltage() {
        let (mut y, mut p) = (axis(), axis());
        let o = cascade_update(None, &RateVector::new(0.0, 0.01, -0.01, FrameId::Platform), &mut y, &mut p).unwrap();
        assert!(o.v_pitch < 0.0 && o.v_yaw > 0.0);
    }
}
