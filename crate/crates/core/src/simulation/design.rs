//! Controller design against the scenario's linearised rigid-body plants.

use std::fmt::Write as _;

use crate::control::{design_loop, tustin_discretize, LoopDesign, TransferFunction};
use crate::dynamics::Body;
use crate::error::Result;

use super::scenario::{AxisControllers, Scenario};

/// Padé order used for the camera latency in the tracking design plant.
const DELAY_PADE_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Yaw,
    Pitch,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Yaw => "yaw",
            Channel::Pitch => "pitch",
        }
    }
}

/// Joint inertia seen by the motor at θ = 0.
pub fn joint_inertia(sc: &Scenario, ch: Channel) -> Result<f64> {
    let p = sc.inertia(Body::Platform)?;
    Ok(match ch {
        Channel::Pitch => p.iyy,
        Channel::Yaw => sc.inertia(Body::Gimbal)?.izz + p.izz,
    })
}

/// Motor voltage to inertial rate: `(Kt/R) / (J s + b + Kt Ke / R)`.
pub fn stabilization_plant(sc: &Scenario, ch: Channel) -> Result<TransferFunction> {
    let (motor, friction) = match ch {
        Channel::Yaw => (&sc.motors.yaw, &sc.friction.yaw),
        Channel::Pitch => (&sc.motors.pitch, &sc.friction.pitch),
    };
    let j = joint_inertia(sc, ch)?;
    TransferFunction::new(
        vec![motor.voltage_gain()],
        vec![j, friction.viscous + motor.electrical_damping()],
    )
}

/// Rate command to LOS angle. The closed inner loop is integrated and then
/// delayed by the camera latency, taken as the processing delay plus half a
/// frame of sample-and-hold.
pub fn tracking_plant(sc: &Scenario, inner_closed: &TransferFunction) -> TransferFunction {
    let delay = sc.camera.processing_delay + 0.5 * sc.camera.frame_period();
    inner_closed
        .series(&TransferFunction::integrator())
        .series(&TransferFunction::pade_delay(delay, DELAY_PADE_ORDER))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisDesign {
    pub channel: Channel,
    pub stabilization: LoopDesign,
    pub tracking: LoopDesign,
    pub stabilization_plant: TransferFunction,
    pub tracking_plant: TransferFunction,
    pub coefficients: AxisControllers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerDesign {
    pub yaw: AxisDesign,
    pub pitch: AxisDesign,
}

fn design_axis(sc: &Scenario, ch: Channel) -> Result<AxisDesign> {
    let specs = &sc.controllers.design;
    let plant = stabilization_plant(sc, ch)?;
    let stab = design_loop(&plant, &specs.stabilization)?;
    let inner = stab.controller.series(&plant).feedback();
    let outer_plant = tracking_plant(sc, &inner);
    let trk = design_loop(&outer_plant, &specs.tracking)?;
    let coefficients = AxisControllers {
        stabilization: tustin_discretize(&stab.controller, 1.0 / sc.run.stabilization_rate_hz)?,
        tracking: tustin_discretize(&trk.controller, sc.camera.frame_period())?,
    };
    Ok(AxisDesign {
        channel: ch,
        stabilization: stab,
        tracking: trk,
        stabilization_plant: plant,
        tracking_plant: outer_plant,
        coefficients,
    })
}

pub fn design_controllers(sc: &Scenario) -> Result<ControllerDesign> {
    Ok(ControllerDesign {
        yaw: design_axis(sc, Channel::Yaw)?,
        pitch: design_axis(sc, Channel::Pitch)?,
    })
}

fn loop_lines(out: &mut String, label: &str, d: &LoopDesign) {
    let m = &d.analysis.margins;
    let _ = writeln!(out, "  {label}:");
    let _ = writeln!(out, "    kp                 {:.6}", d.kp);
    let _ = writeln!(out, "    ki (rad/s)         {:.6}", d.ki);
    let _ = writeln!(out, "    crossover (Hz)     {:.4}", m.crossover_hz.unwrap_or(f64::NAN));
    let _ = writeln!(out, "    phase margin (deg) {:.2}", m.phase_margin_deg);
    let _ = writeln!(out, "    gain margin (dB)   {:.2}", m.gain_margin_db);
    let _ = writeln!(out, "    bandwidth (Hz)     {:.4}", d.bandwidth_hz());
    let _ = writeln!(out, "    resonance (dB)     {:.3}", d.analysis.resonance_db);
    let _ = writeln!(out, "    gain back-offs     {}", d.backoffs);
}

impl ControllerDesign {
    pub fn apply(&self, sc: &mut Scenario) {
        sc.controllers.yaw = Some(self.yaw.coefficients.clone());
        sc.controllers.pitch = Some(self.pitch.coefficients.clone());
    }

    pub fn axes(&self) -> [&AxisDesign; 2] {
        [&self.yaw, &self.pitch]
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        for a in self.axes() {
            let _ = writeln!(out, "{} axis", a.channel.name());
            loop_lines(&mut out, "stabilization", &a.stabilization);
            loop_lines(&mut out, "tracking", &a.tracking);
        }
        out
    }
}
