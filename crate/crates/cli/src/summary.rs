use std::collections::BTreeMap;
use std::fmt::Write as _;

use isp_core::metrics::{bmi, channel_jitter, step_metrics, ChannelPair, PerformanceSummary};
use isp_core::simulation::{Axis, BaseMotionProfile, Channel, Scenario, Signal, TelemetryLog};

const AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

fn axis_name(a: Axis) -> &'static str {
    match a {
        Axis::X => "x",
        Axis::Y => "y",
        Axis::Z => "z",
    }
}

pub fn parse_axis(s: &str) -> Option<Axis> {
    match s {
        "x" => Some(Axis::X),
        "y" => Some(Axis::Y),
        "z" => Some(Axis::Z),
        _ => None,
    }
}

/// Base axis with the largest peak rate, if the base moves at all.
pub fn dominant_base_axis(log: &TelemetryLog) -> Option<Axis> {
    let peak = |a: Axis| log.column(Signal::Wb(a.index())).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    AXES.into_iter()
        .map(|a| (a, peak(a)))
        .filter(|(_, p)| *p > 0.0)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(a, _)| a)
}

/// Disturbance axis declared by the scenario's base profile.
pub fn scenario_disturbance_axis(sc: &Scenario, log: &TelemetryLog) -> Option<Axis> {
    match &sc.profiles.base {
        BaseMotionProfile::None => None,
        BaseMotionProfile::Sine { axis, .. } => Some(*axis),
        _ => dominant_base_axis(log),
    }
}

/// Metrics text for one log.
pub fn log_summary(log: &TelemetryLog, disturbance: Option<Axis>) -> String {
    let mut s = String::new();
    let span = log.rows.last().map_or(0.0, |r| r.t);
    let _ = writeln!(s, "rows: {} over {span} s", log.len());
    for ch in [Channel::Yaw, Channel::Pitch] {
        match step_metrics(log, ch) {
            Ok(m) => {
                let settle = m.settling_time.map_or("unsettled".into(), |t| format!("{t:.3} s"));
                let _ = writeln!(
                    s,
                    "{} step: {:.1} mrad at {} s, overshoot {:.2} % ({:.2} mrad), settling {settle}, steady-state error {:.3} mrad",
                    ch.name(),
                    m.command,
                    m.step_time,
                    m.overshoot,
                    m.overshoot_mrad(),
                    m.steady_state_error
                );
            }
            Err(e) => {
                let _ = writeln!(s, "{} step: n/a ({e})", ch.name());
            }
        }
    }
    if let Some(d) = disturbance {
        for r in AXES {
            match bmi(log, d, r) {
                Ok(b) => {
                    let _ = writeln!(
                        s,
                        "isolation {}_b -> {}_p: {:.2} dB ({:.3} of {:.3} deg/s over {} cycles)",
                        axis_name(d),
                        axis_name(r),
                        b.bmi_db,
                        b.response_amplitude.to_degrees(),
                        b.disturbance_amplitude.to_degrees(),
                        b.cycles
                    );
                }
                Err(e) => {
                    let _ = writeln!(s, "isolation {}_b -> {}_p: n/a ({e})", axis_name(d), axis_name(r));
                }
            }
        }
    }
    let _ = writeln!(
        s,
        "jitter: pitch {:.3} mrad, yaw {:.3} mrad",
        channel_jitter(log, Channel::Pitch),
        channel_jitter(log, Channel::Yaw)
    );
    for w in &log.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

pub fn run_summary(sc: &Scenario, log: &TelemetryLog) -> String {
    format!(
        "scenario: {} (seed {})\n{}",
        sc.name,
        sc.run.seed,
        log_summary(log, scenario_disturbance_axis(sc, log))
    )
}

/// Performance table from the bundled runs, keyed by scenario name. Cells
/// whose scenario is missing or whose metric fails stay empty.
pub fn bundle_table(logs: &BTreeMap<String, TelemetryLog>) -> PerformanceSummary {
    let get = |n: &str| logs.get(n);
    let mut t = PerformanceSummary::default();
    if let Some(log) = get("bmi_worstcase") {
        t.bmi_cross = ChannelPair {
            pitch: bmi(log, Axis::Y, Axis::Y).ok().map(|r| r.bmi_db),
            yaw: bmi(log, Axis::Y, Axis::Z).ok().map(|r| r.bmi_db),
        };
    }
    let overshoot = |n: &str, ch| get(n).and_then(|l| step_metrics(l, ch).ok()).map(|m| m.overshoot_mrad());
    t.max_overshoot = ChannelPair {
        pitch: overshoot("step_pitch", Channel::Pitch),
        yaw: overshoot("step_yaw", Channel::Yaw),
    };
    let jitter = |n: &str| {
        get(n).map_or(ChannelPair::default(), |l| ChannelPair {
            pitch: Some(channel_jitter(l, Channel::Pitch)),
            yaw: Some(channel_jitter(l, Channel::Yaw)),
        })
    };
    t.jitter_static = jitter("static_jitter");
    t.jitter_dynamic = jitter("dynamic_jitter");
    t
}
