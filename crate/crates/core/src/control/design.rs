//! Loop shaping for the P and PI compensators used on both cascade levels.
//!
//! The controller is `C(s) = Kp (1 + Ki/s) p/(s + p)` with the lag pole `p`
//! fixed by the `LoopSpec` and `Ki` placed a decade below crossover. The crossover
//! is iterated until the closed-loop −3 dB point lands on the requested
//! bandwidth, then `Kp` is backed off in 10% steps if the resonance peak is
//! over the limit.

use serde::{Deserialize, Serialize};

use super::freq::{analyze_loop, hz_to_rad, LoopAnalysis};
use super::tf::TransferFunction;
use crate::error::{IspError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerForm {
    P,
    PI,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    /// Closed-loop −3 dB target, Hz.
    pub bandwidth_hz: f64,
    pub max_resonance_db: f64,
    /// Lag compensator corner, Hz. `None` omits the compensator.
    #[serde(default)]
    pub pole_hz: Option<f64>,
    pub form: ControllerForm,
}

impl LoopSpec {
    pub fn validate(&self, key: &str) -> Result<()> {
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(IspError::config(format!("{key}.bandwidth_hz"), "must be > 0"));
        }
        if !(self.max_resonance_db.is_finite() && self.max_resonance_db > 0.0) {
            return Err(IspError::config(format!("{key}.max_resonance_db"), "must be > 0"));
        }
        if let Some(p) = self.pole_hz {
            if !(p.is_finite() && p > 0.0) {
                return Err(IspError::config(format!("{key}.pole_hz"), "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Allowed relative bandwidth error of an accepted design.
pub const BANDWIDTH_TOLERANCE: f64 = 0.20;
const MAX_BACKOFFS: usize = 10;
const BACKOFF: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct LoopDesign {
    pub controller: TransferFunction,
    pub kp: f64,
    /// rad/s; zero for P.
    pub ki: f64,
    pub analysis: LoopAnalysis,
    pub backoffs: usize,
}

impl LoopDesign {
    pub fn bandwidth_hz(&self) -> f64 {
        self.analysis.bandwidth_hz.unwrap_or(f64::NAN)
    }
}

/// `(1 + Ki/s) p/(s + p)` with unit gain.
fn shape(spec: &LoopSpec, ki: f64) -> TransferFunction {
    let mut c = TransferFunction::gain(1.0);
    if spec.form == ControllerForm::PI {
        c = TransferFunction::new(vec![1.0, ki], vec![1.0, 0.0]).expect("proper");
    }
    if let Some(p) = spec.pole_hz {
        c = c.series(&TransferFunction::first_order_lag(hz_to_rad(p)));
    }
    c
}

pub fn controller_tf(spec: &LoopSpec, kp: f64, ki: f64) -> TransferFunction {
    shape(spec, ki).scale(kp)
}

/// Gain putting `|Kp C1(jωc) P(jωc)| = 1`.
fn crossover_gain(unit_loop: &TransferFunction, fc: f64) -> Result<f64> {
    let m = unit_loop.at_hz(fc).norm();
    if !(m.is_finite() && m > 0.0) {
        return Err(IspError::Design(format!("loop magnitude at {fc:.4} Hz is {m}")));
    }
    Ok(1.0 / m)
}

pub fn design_loop(plant: &TransferFunction, spec: &LoopSpec) -> Result<LoopDesign> {
    spec.validate("spec")?;
    let target = spec.bandwidth_hz;
    let mut fc = target;
    let mut result = None;

    for _ in 0..60 {
        let ki = if spec.form == ControllerForm::PI { hz_to_rad(fc) / 10.0 } else { 0.0 };
        let unit = shape(spec, ki).series(plant);
        let kp = crossover_gain(&unit, fc)?;
        let open = unit.scale(kp);
        let a = analyze_loop(&open);
        if a.margins.crossover_hz.is_none() {
            return Err(IspError::Design(format!(
                "open loop never crosses 0 dB (gain {kp:.4} at {fc:.3} Hz)"
            )));
        }
        let Some(bw) = a.bandwidth_hz else {
            return Err(IspError::Design("closed loop has no -3 dB point".into()));
        };
        result = Some((kp, ki, a));
        if (bw / target - 1.0).abs() < 1e-6 {
            break;
        }
        let next = fc * target / bw;
        if !(next.is_finite() && next > 0.0) {
            break;
        }
        fc = next;
    }
    let (mut kp, ki, mut a) = result.expect("loop ran at least once");

    let mut backoffs = 0;
    while a.resonance_db >= spec.max_resonance_db && backoffs < MAX_BACKOFFS {
        kp *= BACKOFF;
        backoffs += 1;
        a = analyze_loop(&controller_tf(spec, kp, ki).series(plant));
    }

    let bw = a.bandwidth_hz.unwrap_or(f64::NAN);
    if !a.stable {
        return Err(IspError::Design(format!("closed loop is unstable (Kp = {kp:.4})")));
    }
    if a.resonance_db >= spec.max_resonance_db {
        return Err(IspError::Design(format!(
            "resonance {:.2} dB exceeds limit {:.2} dB after {backoffs} back-offs",
            a.resonance_db, spec.max_resonance_db
        )));
    }
    if !((bw / target - 1.0).abs() <= BANDWIDTH_TOLERANCE) {
        return Err(IspError::Design(format!(
            "bandwidth {bw:.3} Hz outside ±{:.0}% of {target:.3} Hz (resonance {:.2} dB, {backoffs} back-offs)",
            BANDWIDTH_TOLERANCE * 100.0,
            a.resonance_db
        )));
    }
    Ok(LoopDesign {
        controller: controller_tf(spec, kp, ki),
        kp,
        ki,
        analysis: a,
        backoffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn p_only(bw: f64) -> LoopSpec {
        LoopSpec {
            bandwidth_hz: bw,
            max_resonance_db: 3.0,
            pole_hz: None,
            form: ControllerForm::P,
        }
    }

    #[test]
    fn pure_inertia_gain() {
        let j = 0.0164;
        let plant = TransferFunction::new(vec![1.0], vec![j, 0.0]).unwrap();
        let d = design_loop(&plant, &p_only(38.0)).unwrap();
        assert_abs_diff_eq!(d.kp, j * 2.0 * PI * 38.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d.kp, 3.916, epsilon = 5e-4);
        assert_abs_diff_eq!(d.bandwidth_hz(), 38.0, epsilon = 1e-6);
    }

    #[test]
    fn constant_plant_fails() {
        let err = design_loop(&TransferFunction::gain(1.0), &p_only(10.0)).unwrap_err();
        assert!(err.to_string().contains("0 dB"), "{err}");
    }

    #[test]
    fn pi_with_lag_meets_spec() {
        let plant = TransferFunction::new(vec![0.04], vec![0.0164, 0.0005 + 0.0016]).unwrap();
        let spec = LoopSpec {
            bandwidth_hz: 38.0,
            max_resonance_db: 3.0,
            pole_hz: Some(150.0),
            form: ControllerForm::PI,
        };
        let d = design_loop(&plant, &spec).unwrap();
        assert!((d.bandwidth_hz() / 38.0 - 1.0).abs() <= 0.2);
        assert!(d.analysis.resonance_db < 3.0);
        assert_abs_diff_eq!(d.ki, hz_to_rad(d.analysis.margins.crossover_hz.unwrap()) / 10.0, epsilon = 0.5);
    }

    #[test]
    fn unmeetable_resonance_is_reported() {
        // a lightly damped plant can't reach the bandwidth under a tiny peak limit
        let plant = TransferFunction::new(vec![1.0], vec![1.0, 0.0, 0.0]).unwrap();
        let spec = LoopSpec {
            bandwidth_hz: 1.0,
            max_resonance_db: 0.1,
            pole_hz: Some(5.0),
            form: ControllerForm::P,
        };
        assert!(design_loop(&plant, &spec).is_err());
    }

    #[test]
    fn invalid_spec_names_key() {
        let err = design_loop(&TransferFunction::integrator(), &p_only(-1.0)).unwrap_err();
        assert!(err.to_string().contains("bandwidth_hz"));
    }
}
