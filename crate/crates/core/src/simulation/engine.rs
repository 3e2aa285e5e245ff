//! Multirate closed-loop run.
//!
//! Each integration tick of length `dt` runs, in order:
//!
//! 1. sensors sample the true state (gyro and pots on stabilization ticks),
//! 2. the camera captures on frame ticks and releases frames whose
//!    processing delay has elapsed,
//! 3. the cascade updates on stabilization ticks, the tracking half only
//!    when a new frame was released,
//! 4. the motor voltages are latched,
//! 5. the row is logged,
//! 6. the plant is integrated over `[t, t + dt]` with the voltages held.
//!
//! A controller output therefore acts one integration step after the sample
//! it was computed from.

use crate::control::{cascade_update, AxisCascade, CascadeOutput, DiscreteController};
use crate::dynamics::{BaseMotionSource, DynamicState, JointDrive};
use crate::error::{IspError, Result};
use crate::frames::{rate_chain, Attitude, FrameId, RateVector};
use crate::sensing::{gyro_sample, pot_sample, NoiseStream};
use crate::tracking::{
    detect_centroid, pixel_to_error, render_disk, tracking_error, Camera, DetectionMode, PixelCoord, SyntheticFrame,
    TrackingError,
};

use super::scenario::{AxisControllers, LoopMode, Scenario};
use super::telemetry::{TelemetryLog, TelemetryRow};

/// Log and optional failure of a run. On failure the log holds every row
/// recorded before the failing step.
#[derive(Debug)]
pub struct RunOutcome {
    pub log: TelemetryLog,
    pub failure: Option<IspError>,
}

fn build_axis(c: &AxisControllers, voltage_limit: f64, rate_limit: f64, anti_windup: bool) -> Result<AxisCascade> {
    let stab = DiscreteController::with_symmetric_limit(c.stabilization.clone(), voltage_limit, anti_windup)?;
    let trk = DiscreteController::with_symmetric_limit(c.tracking.clone(), rate_limit, anti_windup)?;
    Ok(AxisCascade::new(trk, stab))
}

/// Renders the target as a disk and runs centroid detection on the frame.
fn synthetic_detection(err: &TrackingError, cam: &Camera) -> Option<PixelCoord> {
    let m = cam.model();
    let mut frame = SyntheticFrame::black(m.width, m.height);
    let col = (m.width as f64 - 1.0) / 2.0 + err.yaw / m.pixel_scale;
    let row = (m.height as f64 - 1.0) / 2.0 + err.pitch / m.pixel_scale;
    render_disk(&mut frame, col, row, m.target_radius / m.pixel_scale, 1.0);
    detect_centroid(&frame, m.threshold)
}

/// Yaw and pitch of a direction from `+x` of a frame, mrad, in the rotation
/// sense of the gimbal joints.
fn rotation_angles(v: &nalgebra::Vector3<f64>) -> (f64, f64) {
    (v.y.atan2(v.x) * 1e3, -v.z.atan2(v.x) * 1e3)
}

pub fn run_scenario(sc: &Scenario) -> Result<TelemetryLog> {
    let out = run_scenario_partial(sc)?;
    match out.failure {
        Some(e) => Err(e),
        None => Ok(out.log),
    }
}

/// Like [`run_scenario`] but hands back the partial log on a runtime failure.
/// Configuration errors are still returned as `Err`.
pub fn run_scenario_partial(sc: &Scenario) -> Result<RunOutcome> {
    sc.validate()?;
    let plant = sc.plant()?;
    let base = sc.profiles.base.source(sc.base_dir.as_deref())?;
    let gyro_model = sc.effective_gyro();
    let pot_model = sc.effective_pot();
    let seed = sc.run.seed;
    let mut gyro_rng = NoiseStream::new(seed, "gyro");
    let mut pot_yaw_rng = NoiseStream::new(seed, "pot_yaw");
    let mut pot_pitch_rng = NoiseStream::new(seed, "pot_pitch");
    let mut camera = Camera::new(sc.camera.clone());

    let closed = sc.run.mode == LoopMode::ClosedLoop;
    let tracking = closed && sc.run.tracking;
    let mut axes = if closed {
        let c = &sc.controllers;
        let yaw = c.yaw.as_ref().expect("validated");
        let pitch = c.pitch.as_ref().expect("validated");
        Some((
            build_axis(yaw, sc.motors.yaw.supply_limit, c.rate_command_limit, c.anti_windup)?,
            build_axis(pitch, sc.motors.pitch.supply_limit, c.rate_command_limit, c.anti_windup)?,
        ))
    } else {
        None
    };

    let dt = sc.run.dt_s;
    let n = sc.steps();
    let stab_every = sc.stabilization_ticks();
    let frame_every = sc.frame_ticks();
    let decimation = sc.run.log_decimation;

    let mut state = DynamicState::at_rest(sc.initial.psi_deg.to_radians(), sc.initial.theta_deg.to_radians());
    state.base_rate = RateVector::from_vector(base.rate(0.0), FrameId::Base);
    state.base_rate_dot = base.rate_dot(0.0);
    let initial_platform: Attitude = state.platform_attitude();

    let mut log = TelemetryLog {
        rows: Vec::with_capacity(n / decimation + 1),
        warnings: Vec::new(),
    };
    let mut failure = None;
    let mut cmd = CascadeOutput::default();
    let mut gyro_meas = RateVector::zero(FrameId::Platform);
    let (mut psi_meas, mut theta_meas) = (0.0, 0.0);
    let mut detect = false;
    let mut pending: Option<TrackingError> = None;

    for k in 0..=n {
        let t = k as f64 * dt;
        let chained = rate_chain(&state.base_rate, &state.angles);
        let attitude = state.platform_attitude();
        let target = sc.profiles.target.target_direction(t, &initial_platform);
        let true_err = tracking_error(&target, &attitude).ok();
        let (ytc, ptc) = rotation_angles(&initial_platform.inertial_to_body(&target));

        if k % stab_every == 0 {
            gyro_meas = gyro_sample(&chained.omega_p, &gyro_model, &mut gyro_rng);
            psi_meas = pot_sample(state.angles.psi, &pot_model, &mut pot_yaw_rng);
            theta_meas = pot_sample(state.angles.theta, &pot_model, &mut pot_pitch_rng);
        }

        if tracking {
            if k % frame_every == 0 {
                match sc.camera.detection {
                    DetectionMode::Geometric => camera.camera_measure(true_err, t),
                    DetectionMode::Synthetic => {
                        let px = true_err.as_ref().and_then(|e| synthetic_detection(e, &camera));
                        camera.push(px, t);
                    }
                }
            }
            if let Some(m) = camera.poll(t) {
                detect = m.pixel.is_some();
                if let Some(px) = m.pixel {
                    pending = Some(pixel_to_error(&px, camera.model()));
                }
            }
        }

        if let Some((yaw, pitch)) = axes.as_mut() {
            if k % stab_every == 0 {
                match cascade_update(pending.take().as_ref(), &gyro_meas, yaw, pitch) {
                    Ok(o) => cmd = o,
                    Err(e) => {
                        failure = Some(IspError::Divergence {
                            time: t,
                            detail: format!("controller input: {e}"),
                        });
                        break;
                    }
                }
            }
        }

        if k % decimation == 0 {
            let (yte, pte) = match true_err {
                Some(e) => (e.yaw, -e.pitch),
                None => (f64::NAN, f64::NAN),
            };
            log.rows.push(TelemetryRow {
                t,
                psi: state.angles.psi,
                theta: state.angles.theta,
                psi_meas,
                theta_meas,
                wb: state.base_rate.omega.into(),
                wg: chained.omega_g.omega.into(),
                wp: chained.omega_p.omega.into(),
                ytc,
                yte,
                ptc,
                pte,
                rate_cmd_y: cmd.rate_cmd_y,
                rate_cmd_z: cmd.rate_cmd_z,
                v_yaw: cmd.v_yaw,
                v_pitch: cmd.v_pitch,
                detect,
            });
        }

        if k == n {
            break;
        }
        let drive = if closed {
            JointDrive::voltages(cmd.v_yaw, cmd.v_pitch)
        } else {
            JointDrive::idle()
        };
        match plant.step(&state, &drive, &base, t, dt) {
            Ok(s) => state = s,
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }

    if let Some(w) = base.warning() {
        log.warnings.push(w);
    }
    Ok(RunOutcome { log, failure })
}
