//! Acceptance suite: replays the bench experiments and the numerical oracles
//! and compares each against a pinned tolerance.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::control::{log_space, tustin_discretize, DiscreteController, TransferFunction};
use crate::dynamics::{system_energy, DynamicState, FixedBase, GimbalPlant, JointDrive};
use crate::error::{IspError, Result};
use crate::metrics::{bmi, channel_jitter, step_metrics};
use crate::simulation::{
    bundled, design_controllers, run_scenario, Axis, BaseMotionProfile, Channel, Scenario, TargetProfile,
};

pub const OVERSHOOT_TARGET: f64 = 8.0;
pub const OVERSHOOT_TOL: f64 = 3.0;
pub const SETTLING_TARGET: f64 = 1.5;
pub const SETTLING_TOL: f64 = 0.3;
pub const BMI_ALIGNED_TARGET: f64 = -30.0;
pub const BMI_CROSS_TARGET: f64 = -26.3;
pub const BMI_TOL: f64 = 3.0;
pub const STAB_BANDWIDTH_TARGET: f64 = 38.0;
pub const TRACK_BANDWIDTH_TARGET: f64 = 1.0;
/// Relative band on both loop bandwidths.
pub const BANDWIDTH_TOL: f64 = 0.20;
pub const STAB_RESONANCE_MAX: f64 = 3.0;
/// A tracking peak below this is treated as no resonance.
pub const TRACK_RESONANCE_MAX: f64 = 0.5;
pub const STATIC_JITTER_MAX: f64 = 1.0;
pub const DYNAMIC_JITTER_MAX: f64 = 2.6;
/// Offsets (mrad) that must and must not produce a correction.
pub const FLOOR_HIDDEN_OFFSET: f64 = 0.25;
pub const FLOOR_VISIBLE_OFFSET: f64 = 0.5;
pub const ENERGY_DRIFT_MAX: f64 = 1e-6;
pub const RK4_RATIO_BAND: (f64, f64) = (13.0, 19.0);
pub const DISCRETE_MAG_TOL: f64 = 0.05;
pub const DISCRETE_STEP_TOL: f64 = 0.02;
/// Samples per closed-loop bandwidth period for the sampled step check. At
/// 50 the zero-order hold's half-sample lag alone costs about 2.4 % on the
/// 38 Hz loop, so the check runs at 100 and reports the 50 figure alongside.
pub const STEP_SAMPLES_PER_BANDWIDTH: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    /// Measured values, human readable.
    pub measured: String,
    pub tolerance: String,
    pub passed: bool,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}. {}: {} (required: {})",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub criteria: Vec<Criterion>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn get(&self, id: u8) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.id == id)
    }

    pub fn to_text(&self) -> String {
        let mut s: String = self.criteria.iter().map(|c| format!("{c}\n")).collect();
        let passed = self.criteria.iter().filter(|c| c.passed).count();
        s.push_str(&format!("{passed}/{} criteria passed\n", self.criteria.len()));
        s
    }
}

/// Where the acceptance scenarios come from. A file `<name>.toml` in the
/// override directory replaces the bundled scenario of that name.
#[derive(Debug, Clone, Default)]
pub struct ScenarioSet {
    overrides: Option<PathBuf>,
}

impl ScenarioSet {
    pub fn bundled() -> Self {
        Self::default()
    }

    pub fn with_overrides(dir: impl Into<PathBuf>) -> Self {
        Self {
            overrides: Some(dir.into()),
        }
    }

    pub fn load(&self, name: &str) -> Result<Scenario> {
        if let Some(dir) = &self.overrides {
            let path = dir.join(format!("{name}.toml"));
            if path.is_file() {
                return Scenario::load(&path);
            }
        }
        bundled::load(name)
    }

    pub fn override_dir(&self) -> Option<&Path> {
        self.overrides.as_deref()
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn failed(id: u8, name: &'static str, tolerance: String, err: IspError) -> Criterion {
    Criterion {
        id,
        name,
        measured: format!("error: {err}"),
        tolerance,
        passed: false,
    }
}

fn criterion(
    id: u8,
    name: &'static str,
    tolerance: String,
    f: impl FnOnce() -> Result<(String, bool)>,
) -> Criterion {
    match f() {
        Ok((measured, passed)) => Criterion {
            id,
            name,
            measured,
            tolerance,
            passed,
        },
        Err(e) => failed(id, name, tolerance, e),
    }
}

pub fn step_tracking(set: &ScenarioSet) -> Criterion {
    criterion(
        1,
        "step tracking response",
        format!("overshoot {OVERSHOOT_TARGET} ± {OVERSHOOT_TOL} %, settling {SETTLING_TARGET} ± {SETTLING_TOL} s"),
        || {
            let log = run_scenario(&set.load("step_yaw")?)?;
            let m = step_metrics(&log, Channel::Yaw)?;
            let settle_ok = m.settling_time.is_some_and(|s| within(s, SETTLING_TARGET, SETTLING_TOL));
            let settle = m.settling_time.map_or("unsettled".to_string(), |s| format!("{s:.3} s"));
            Ok((
                format!("overshoot {:.2} %, settling {settle}", m.overshoot),
                within(m.overshoot, OVERSHOOT_TARGET, OVERSHOOT_TOL) && settle_ok,
            ))
        },
    )
}

/// Criteria 2 and 3 share one run.
pub fn base_motion_isolation(set: &ScenarioSet) -> [Criterion; 2] {
    let tol = |t: f64| format!("{t} ± {BMI_TOL} dB");
    let names = ["aligned base motion isolation (y_p)", "cross-axis coupling (z_p)"];
    let log = match set.load("bmi_worstcase").and_then(|sc| run_scenario(&sc)) {
        Ok(l) => l,
        Err(e) => {
            let msg = e.to_string();
            return [
                failed(2, names[0], tol(BMI_ALIGNED_TARGET), IspError::Metrics(msg.clone())),
                failed(3, names[1], tol(BMI_CROSS_TARGET), IspError::Metrics(msg)),
            ];
        }
    };
    let one = |id, name, axis, target| {
        criterion(id, name, tol(target), || {
            let r = bmi(&log, Axis::Y, axis)?;
            Ok((
                format!(
                    "{:.2} dB (residual {:.3} °/s of {:.2} °/s)",
                    r.bmi_db,
                    r.response_amplitude.to_degrees(),
                    r.disturbance_amplitude.to_degrees()
                ),
                within(r.bmi_db, target, BMI_TOL),
            ))
        })
    };
    [
        one(2, names[0], Axis::Y, BMI_ALIGNED_TARGET),
        one(3, names[1], Axis::Z, BMI_CROSS_TARGET),
    ]
}

pub fn loop_shapes(set: &ScenarioSet) -> Criterion {
    let lo = |t: f64| t * (1.0 - BANDWIDTH_TOL);
    let hi = |t: f64| t * (1.0 + BANDWIDTH_TOL);
    criterion(
        4,
        "loop-shape targets",
        format!(
            "stabilization bandwidth in [{:.1}, {:.1}] Hz with resonance < {STAB_RESONANCE_MAX} dB; \
             tracking bandwidth in [{:.1}, {:.1}] Hz with resonance < {TRACK_RESONANCE_MAX} dB",
            lo(STAB_BANDWIDTH_TARGET),
            hi(STAB_BANDWIDTH_TARGET),
            lo(TRACK_BANDWIDTH_TARGET),
            hi(TRACK_BANDWIDTH_TARGET),
        ),
        || {
            let d = design_controllers(&set.load("step_yaw")?)?;
            let mut parts = Vec::new();
            let mut ok = true;
            for axis in d.axes() {
                let (s, t) = (&axis.stabilization, &axis.tracking);
                ok &= s.analysis.stable && t.analysis.stable;
                ok &= (lo(STAB_BANDWIDTH_TARGET)..=hi(STAB_BANDWIDTH_TARGET)).contains(&s.bandwidth_hz());
                ok &= s.analysis.resonance_db < STAB_RESONANCE_MAX;
                ok &= (lo(TRACK_BANDWIDTH_TARGET)..=hi(TRACK_BANDWIDTH_TARGET)).contains(&t.bandwidth_hz());
                ok &= t.analysis.resonance_db < TRACK_RESONANCE_MAX;
                parts.push(format!(
                    "{} stab {:.2} Hz / {:.2} dB, track {:.3} Hz / {:.2} dB",
                    axis.channel.name(),
                    s.bandwidth_hz(),
                    s.analysis.resonance_db,
                    t.bandwidth_hz(),
                    t.analysis.resonance_db
                ));
            }
            Ok((parts.join("; "), ok))
        },
    )
}

pub fn jitter_limits(set: &ScenarioSet) -> Criterion {
    criterion(
        5,
        "jitter",
        format!("static ≤ {STATIC_JITTER_MAX} mrad, dynamic ≤ {DYNAMIC_JITTER_MAX} mrad, both channels"),
        || {
            let s = run_scenario(&set.load("static_jitter")?)?;
            let d = run_scenario(&set.load("dynamic_jitter")?)?;
            let j = |log, ch| channel_jitter(log, ch);
            let vals = [
                j(&s, Channel::Pitch),
                j(&s, Channel::Yaw),
                j(&d, Channel::Pitch),
                j(&d, Channel::Yaw),
            ];
            Ok((
                format!(
                    "static pitch {:.3} / yaw {:.3} mrad, dynamic pitch {:.3} / yaw {:.3} mrad",
                    vals[0], vals[1], vals[2], vals[3]
                ),
                vals[..2].iter().all(|v| *v <= STATIC_JITTER_MAX) && vals[2..].iter().all(|v| *v <= DYNAMIC_JITTER_MAX),
            ))
        },
    )
}

/// Yaw correction achieved (mrad) after holding a constant target offset on a
/// still, noise-free bench.
pub fn offset_correction(base: &Scenario, offset_mrad: f64) -> Result<f64> {
    let mut sc = base.clone();
    sc.run.duration_s = 3.0;
    sc.run.sensor_noise = false;
    sc.run.tracking = true;
    sc.initial = Default::default();
    sc.profiles.base = BaseMotionProfile::None;
    sc.profiles.target = TargetProfile::Fixed {
        yaw_offset_mrad: offset_mrad,
        pitch_offset_mrad: 0.0,
        step_time_s: 0.0,
    };
    let log = run_scenario(&sc)?;
    let last = log.rows.last().expect("a run logs at least one row");
    Ok(last.ytc - last.yte)
}

pub fn resolution_floor(set: &ScenarioSet) -> Criterion {
    criterion(
        6,
        "tracking resolution floor",
        format!(
            "{FLOOR_HIDDEN_OFFSET} mrad offset uncorrected (< 0.05 mrad), \
             {FLOOR_VISIBLE_OFFSET} mrad offset corrected (≥ 0.25 mrad)"
        ),
        || {
            let base = set.load("step_yaw")?;
            let hidden = offset_correction(&base, FLOOR_HIDDEN_OFFSET)?;
            let visible = offset_correction(&base, FLOOR_VISIBLE_OFFSET)?;
            Ok((
                format!(
                    "pixel scale {} mrad (floor {} mrad): correction {hidden:.3} mrad for {FLOOR_HIDDEN_OFFSET}, \
                     {visible:.3} mrad for {FLOOR_VISIBLE_OFFSET}",
                    base.camera.pixel_scale,
                    base.camera.pixel_scale / 2.0
                ),
                hidden.abs() < 0.05 && visible >= 0.25,
            ))
        },
    )
}

fn free_swing_plant() -> GimbalPlant {
    GimbalPlant::default().frictionless()
}

fn free_swing_start() -> DynamicState {
    let mut s = DynamicState::at_rest(0.3, 0.4);
    s.angles.psi_dot = 0.5;
    s.angles.theta_dot = -0.7;
    s
}

fn free_swing(dt: f64, duration: f64) -> Result<Vec<DynamicState>> {
    let plant = free_swing_plant();
    let n = (duration / dt).round() as usize;
    let mut s = free_swing_start();
    let mut out = Vec::with_capacity(n + 1);
    out.push(s);
    for k in 0..n {
        s = plant.step(&s, &JointDrive::idle(), &FixedBase, k as f64 * dt, dt)?;
        out.push(s);
    }
    Ok(out)
}

/// Largest relative kinetic-energy change over a torque-free swing.
pub fn energy_drift(dt: f64, duration: f64) -> Result<f64> {
    let p = free_swing_plant();
    let states = free_swing(dt, duration)?;
    let e0 = system_energy(&states[0], &p.platform, &p.gimbal);
    Ok(states
        .iter()
        .map(|s| (system_energy(s, &p.platform, &p.gimbal) - e0).abs() / e0)
        .fold(0.0, f64::max))
}

/// Ratio of successive final-state differences for steps h, h/2, h/4. Near
/// 16 for a fourth-order integrator.
pub fn rk4_order_ratio(h: f64, duration: f64) -> Result<f64> {
    let end = |dt| -> Result<[f64; 4]> {
        let s = *free_swing(dt, duration)?.last().expect("non-empty");
        Ok([s.angles.psi, s.angles.theta, s.angles.psi_dot, s.angles.theta_dot])
    };
    let (a, b, c) = (end(h)?, end(h / 2.0)?, end(h / 4.0)?);
    let norm = |x: &[f64; 4], y: &[f64; 4]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    Ok(norm(&a, &b) / norm(&b, &c))
}

pub fn physics_oracle() -> Criterion {
    criterion(
        7,
        "physics oracle",
        format!(
            "energy drift ≤ {ENERGY_DRIFT_MAX:e} over 10 s at 1 ms; RK4 halving ratio in [{}, {}]",
            RK4_RATIO_BAND.0, RK4_RATIO_BAND.1
        ),
        || {
            let drift = energy_drift(1e-3, 10.0)?;
            let ratio = rk4_order_ratio(0.04, 2.0)?;
            Ok((
                format!("energy drift {drift:.2e}, halving ratio {ratio:.2}"),
                drift <= ENERGY_DRIFT_MAX && (RK4_RATIO_BAND.0..=RK4_RATIO_BAND.1).contains(&ratio),
            ))
        },
    )
}

/// Largest relative magnitude error of the Tustin form against the
/// continuous controller, from 0.1 Hz up to a fifth of Nyquist.
pub fn discrete_magnitude_error(tf: &TransferFunction, ts: f64) -> Result<f64> {
    let d = tustin_discretize(tf, ts)?;
    let freqs = log_space(0.1, 0.1 / ts, 50);
    Ok(freqs
        .iter()
        .map(|&f| (d.at_hz(f).norm() / tf.at_hz(f).norm() - 1.0).abs())
        .fold(0.0, f64::max))
}

/// Integrates `x' = A x + B u` with RK4, `u` held over `dt`.
fn ss_step(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DVector<f64>, x: &nalgebra::DVector<f64>, u: f64, dt: f64) -> nalgebra::DVector<f64> {
    let f = |x: &nalgebra::DVector<f64>| a * x + b * u;
    let k1 = f(x);
    let k2 = f(&(x + &k1 * (0.5 * dt)));
    let k3 = f(&(x + &k2 * (0.5 * dt)));
    let k4 = f(&(x + &k3 * dt));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Peak deviation, as a fraction of the final value, between the sampled
/// loop (Tustin controller, zero-order-held plant input) and the continuous
/// closed loop `CP/(1+CP)` for a unit step over `duration`.
pub fn discrete_step_deviation(
    controller: &TransferFunction,
    plant: &TransferFunction,
    ts: f64,
    duration: f64,
) -> Result<f64> {
    const SUB: usize = 50;
    let mut c = DiscreteController::new(tustin_discretize(controller, ts)?, None, false)?;
    let (pa, pb, pc, pd) = plant.state_space();
    let closed = controller.series(plant).feedback();
    let (ca, cb, cc, cd) = closed.state_space();
    let final_value = closed.dc_gain();

    let mut xp = nalgebra::DVector::zeros(pa.nrows());
    let mut xc = nalgebra::DVector::zeros(ca.nrows());
    let mut worst = 0.0f64;
    let n = (duration / ts).round() as usize;
    let h = ts / SUB as f64;
    let mut y_cont = cd;
    for _ in 0..n {
        let y_disc = pc.dot(&xp);
        worst = worst.max((y_disc - y_cont).abs());
        let u = c.update(1.0 - y_disc)?;
        for _ in 0..SUB {
            xp = ss_step(&pa, &pb, &xp, u, h);
            xc = ss_step(&ca, &cb, &xc, 1.0, h);
        }
        // a strictly proper plant is assumed: the sampled output ignores pd
        debug_assert_eq!(pd, 0.0);
        y_cont = cc.dot(&xc) + cd;
    }
    Ok(worst / final_value.abs())
}

pub fn discretization_oracle(set: &ScenarioSet) -> Criterion {
    criterion(
        8,
        "discretization oracle",
        format!(
            "Tustin DC gain exact; magnitude within {:.0} % to Nyquist/5; sampled step within {:.0} % of the linear model \
             at {STEP_SAMPLES_PER_BANDWIDTH} samples per bandwidth",
            DISCRETE_MAG_TOL * 100.0,
            DISCRETE_STEP_TOL * 100.0
        ),
        || {
            let sc = set.load("step_yaw")?;
            let d = design_controllers(&sc)?;
            let ts_stab = 1.0 / sc.run.stabilization_rate_hz;
            let ts_track = 1.0 / sc.camera.frame_rate;

            let mut dc_err = 0.0f64;
            let mut mag_err = 0.0f64;
            let mut step_dev = 0.0f64;
            let mut coarse_dev = 0.0f64;
            // sample periods are rounded down to divide the engine's stabilization period
            let sample = |per_bw: f64, bw: f64| ts_stab / (ts_stab * per_bw * bw).ceil();
            for axis in d.axes() {
                let track = &axis.tracking.controller;
                let dt = tustin_discretize(track, ts_track)?;
                dc_err = dc_err.max((dt.dc_gain() - track.dc_gain()).abs() / track.dc_gain().abs());
                mag_err = mag_err
                    .max(discrete_magnitude_error(&axis.stabilization.controller, ts_stab)?)
                    .max(discrete_magnitude_error(track, ts_track)?);
                let (c, p, bw) = (&axis.stabilization.controller, &axis.stabilization_plant, axis.stabilization.bandwidth_hz());
                step_dev = step_dev.max(discrete_step_deviation(c, p, sample(STEP_SAMPLES_PER_BANDWIDTH, bw), 0.25)?);
                coarse_dev = coarse_dev.max(discrete_step_deviation(c, p, sample(50.0, bw), 0.25)?);
            }
            Ok((
                format!(
                    "DC gain error {dc_err:.1e}, magnitude error {:.2} %, step deviation {:.2} % \
                     at {STEP_SAMPLES_PER_BANDWIDTH} samples per bandwidth ({:.2} % at 50)",
                    mag_err * 100.0,
                    step_dev * 100.0,
                    coarse_dev * 100.0
                ),
                dc_err <= 1e-12 && mag_err <= DISCRETE_MAG_TOL && step_dev <= DISCRETE_STEP_TOL,
            ))
        },
    )
}

pub fn determinism(set: &ScenarioSet) -> Criterion {
    criterion(
        9,
        "determinism",
        "identical seeds give byte-identical telemetry CSV".into(),
        || {
            let mut same = true;
            let mut bytes = 0;
            for name in ["dynamic_jitter", "moon_track"] {
                let sc = set.load(name)?;
                let a = run_scenario(&sc)?.to_csv_string();
                let b = run_scenario(&sc)?.to_csv_string();
                same &= a == b;
                bytes += a.len();
            }
            Ok((
                format!("{} over {bytes} bytes of CSV", if same { "identical" } else { "different" }),
                same,
            ))
        },
    )
}

/// Runs all nine criteria. Independent groups run on separate threads; each
/// scenario stays single-threaded.
pub fn run_acceptance(set: &ScenarioSet) -> VerifyReport {
    let mut criteria = std::thread::scope(|s| {
        let handles = [
            s.spawn(|| vec![step_tracking(set)]),
            s.spawn(|| base_motion_isolation(set).to_vec()),
            s.spawn(|| vec![loop_shapes(set), discretization_oracle(set)]),
            s.spawn(|| vec![jitter_limits(set)]),
            s.spawn(|| vec![resolution_floor(set)]),
            s.spawn(|| vec![physics_oracle()]),
            s.spawn(|| vec![determinism(set)]),
        ];
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("acceptance worker panicked"))
            .collect::<Vec<_>>()
    });
    criteria.sort_by_key(|c| c.id);
    VerifyReport { criteria }
}
