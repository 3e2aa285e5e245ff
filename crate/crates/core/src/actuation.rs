//! Direct-drive brushed DC motor.
//!
//! The H-bridge PWM stage is treated as an ideal average-voltage source and
//! winding inductance is neglected: the electrical pole of a small coreless
//! motor sits far above the stabilization bandwidth.

use serde::{Deserialize, Serialize};

use crate::error::{IspError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotorParams {
    /// N·m/A
    pub torque_constant: f64,
    /// V·s/rad
    pub back_emf_constant: f64,
    /// ohm
    pub winding_resistance: f64,
    /// Symmetric supply clamp, V.
    pub supply_limit: f64,
}

impl Default for MotorParams {
    fn default() -> Self {
        Self {
            torque_constant: 0.04,
            back_emf_constant: 0.04,
            winding_resistance: 1.0,
            supply_limit: 24.0,
        }
    }
}

impl MotorParams {
    pub fn validate(&self, key: &str) -> Result<()> {
        let fields = [
            ("torque_constant", self.torque_constant),
            ("back_emf_constant", self.back_emf_constant),
            ("winding_resistance", self.winding_resistance),
            ("supply_limit", self.supply_limit),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(IspError::config(format!("{key}.{name}"), "must be > 0"));
            }
        }
        Ok(())
    }

    /// Equivalent viscous damping from back-EMF through the winding, N·m·s/rad.
    pub fn electrical_damping(&self) -> f64 {
        self.torque_constant * self.back_emf_constant / self.winding_resistance
    }

    /// Torque per volt at stall, N·m/V.
    pub fn voltage_gain(&self) -> f64 {
        self.torque_constant / self.winding_resistance
    }
}

/// Shaft torque for a commanded terminal voltage at the given shaft rate.
pub fn motor_torque(command_voltage: f64, shaft_rate: f64, params: &MotorParams) -> f64 {
    let v = command_voltage.clamp(-params.supply_limit, params.supply_limit);
    params.torque_constant * (v - params.back_emf_constant * shaft_rate) / params.winding_resistance
}
