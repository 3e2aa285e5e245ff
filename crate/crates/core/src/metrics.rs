//! Performance figures computed from telemetry.

use std::fmt::Write as _;

use crate::error::{IspError, Result};
use crate::simulation::{Axis, Channel, Signal, TelemetryLog};

/// How a periodic signal's amplitude is estimated over a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplitudeEstimator {
    /// Median of the per-cycle peak magnitudes.
    #[default]
    MedianPeak,
    /// `√2 · RMS` over the whole cycles in the window.
    Rms,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmiOptions {
    /// Samples before this time are skipped as transient, s.
    pub analysis_start: f64,
    pub estimator: AmplitudeEstimator,
}

impl Default for BmiOptions {
    fn default() -> Self {
        Self {
            analysis_start: 2.0,
            estimator: AmplitudeEstimator::MedianPeak,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolationResult {
    pub bmi_db: f64,
    /// Base axis the disturbance was measured about.
    pub disturbance_axis: Axis,
    /// Platform axis the response was measured about.
    pub response_axis: Axis,
    /// rad/s
    pub disturbance_amplitude: f64,
    /// rad/s
    pub response_amplitude: f64,
    pub cycles: usize,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Start indices of cycles: samples where the signal goes from negative to
/// non-negative.
fn upward_crossings(x: &[f64], from: usize) -> Vec<usize> {
    (from.max(1)..x.len())
        .filter(|&i| x[i - 1] < 0.0 && x[i] >= 0.0)
        .collect()
}

/// Amplitude of `signal` over cycles delimited by `bounds`.
fn amplitude(signal: &[f64], bounds: &[usize], est: AmplitudeEstimator) -> f64 {
    match est {
        AmplitudeEstimator::MedianPeak => {
            let mut peaks: Vec<f64> = bounds
                .windows(2)
                .map(|w| signal[w[0]..w[1]].iter().fold(0.0f64, |m, v| m.max(v.abs())))
                .collect();
            median(&mut peaks)
        }
        AmplitudeEstimator::Rms => {
            let seg = &signal[bounds[0]..*bounds.last().expect("≥ 2 bounds")];
            (2.0 * seg.iter().map(|v| v * v).sum::<f64>() / seg.len() as f64).sqrt()
        }
    }
}

/// Ratio amplitude of the platform rate about `resp_axis` to the base rate
/// about `dist_axis`, in dB. Cycles are cut at the disturbance's upward zero
/// crossings after `analysis_start`.
pub fn bmi_with(log: &TelemetryLog, dist_axis: Axis, resp_axis: Axis, opts: &BmiOptions) -> Result<IsolationResult> {
    let t = log.times();
    let dist = log.column(Signal::Wb(dist_axis.index()));
    let resp = log.column(Signal::Wp(resp_axis.index()));
    let start = t.partition_point(|x| *x < opts.analysis_start);
    let bounds = upward_crossings(&dist, start);
    let cycles = bounds.len().saturating_sub(1);
    if cycles < 3 {
        return Err(IspError::Metrics(format!(
            "need at least 3 disturbance cycles after t = {} s, found {cycles}",
            opts.analysis_start
        )));
    }
    let d = amplitude(&dist, &bounds, opts.estimator);
    let r = amplitude(&resp, &bounds, opts.estimator);
    if !(d > 0.0) {
        return Err(IspError::Metrics("disturbance amplitude is zero".into()));
    }
    Ok(IsolationResult {
        bmi_db: 20.0 * (r / d).log10(),
        disturbance_axis: dist_axis,
        response_axis: resp_axis,
        disturbance_amplitude: d,
        response_amplitude: r,
        cycles,
    })
}

pub fn bmi(log: &TelemetryLog, dist_axis: Axis, resp_axis: Axis) -> Result<IsolationResult> {
    bmi_with(log, dist_axis, resp_axis, &BmiOptions::default())
}

/// Peak deviation of the integrated rate, mrad. The rate mean is removed
/// before trapezoidal integration and the angle mean after it.
pub fn jitter_of(t: &[f64], rate: &[f64]) -> f64 {
    let n = rate.len().min(t.len());
    if n < 2 {
        return 0.0;
    }
    let mean_rate = rate[..n].iter().sum::<f64>() / n as f64;
    let mut angle = Vec::with_capacity(n);
    let mut acc = 0.0;
    angle.push(0.0);
    for i in 1..n {
        acc += 0.5 * (rate[i] + rate[i - 1] - 2.0 * mean_rate) * (t[i] - t[i - 1]);
        angle.push(acc);
    }
    let mean_angle = angle.iter().sum::<f64>() / n as f64;
    angle.iter().fold(0.0f64, |m, a| m.max((a - mean_angle).abs())) * 1e3
}

/// Line-of-sight jitter about a platform axis, mrad.
pub fn jitter(log: &TelemetryLog, axis: Axis) -> f64 {
    jitter_of(&log.times(), &log.column(Signal::Wp(axis.index())))
}

/// Jitter on a tracking channel: pitch is about y_p, yaw about z_p.
pub fn channel_jitter(log: &TelemetryLog, ch: Channel) -> f64 {
    jitter(log, channel_axis(ch))
}

pub fn channel_axis(ch: Channel) -> Axis {
    match ch {
        Channel::Yaw => Axis::Z,
        Channel::Pitch => Axis::Y,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    /// s
    pub step_time: f64,
    /// Step size, mrad.
    pub command: f64,
    /// Peak excursion past the command, percent of the step.
    pub overshoot: f64,
    /// Time after the step until the response stays within 2% of the step
    /// size; `None` if it never does within the log.
    pub settling_time: Option<f64>,
    /// Mean of command minus response over the final tenth of the log, mrad.
    pub steady_state_error: f64,
}

impl StepMetrics {
    /// Overshoot in mrad.
    pub fn overshoot_mrad(&self) -> f64 {
        self.overshoot / 100.0 * self.command.abs()
    }
}

pub const SETTLING_BAND: f64 = 0.02;

/// Step metrics from a command series and the achieved angle.
pub fn step_metrics_of(t: &[f64], command: &[f64], response: &[f64]) -> Result<StepMetrics> {
    let n = t.len();
    let Some(k) = (1..n).find(|&i| (command[i] - command[0]).abs() > 1e-9) else {
        return Err(IspError::Metrics("the tracking command never steps".into()));
    };
    let before = command[k - 1];
    let target = command[n - 1];
    let size = target - before;
    let dir = size.signum();
    let peak = response[k..]
        .iter()
        .map(|r| (r - before) * dir)
        .fold(f64::NEG_INFINITY, f64::max);
    let overshoot = ((peak - size.abs()) / size.abs() * 100.0).max(0.0);

    let band = SETTLING_BAND * size.abs();
    let last_out = (k..n).rev().find(|&i| (response[i] - command[i]).abs() > band);
    let settling_time = match last_out {
        None => Some(0.0),
        Some(i) if i + 1 < n => Some(t[i + 1] - t[k]),
        Some(_) => None,
    };
    let tail = (k + (n - k) * 9 / 10)..n;
    let m = tail.len().max(1) as f64;
    let steady_state_error = tail.map(|i| command[i] - response[i]).sum::<f64>() / m;
    Ok(StepMetrics {
        step_time: t[k],
        command: size,
        overshoot,
        settling_time,
        steady_state_error,
    })
}

/// Step metrics of a tracking channel, using the command angle and the
/// achieved angle `command − error`.
pub fn step_metrics(log: &TelemetryLog, ch: Channel) -> Result<StepMetrics> {
    let (c, e) = match ch {
        Channel::Yaw => (Signal::Ytc, Signal::Yte),
        Channel::Pitch => (Signal::Ptc, Signal::Pte),
    };
    let cmd = log.column(c);
    let err = log.column(e);
    if err.iter().any(|v| !v.is_finite()) {
        return Err(IspError::Metrics("target was lost during the step".into()));
    }
    let resp: Vec<f64> = cmd.iter().zip(&err).map(|(c, e)| c - e).collect();
    step_metrics_of(&log.times(), &cmd, &resp)
}

/// Pitch and yaw entries of one summary row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelPair {
    pub pitch: Option<f64>,
    pub yaw: Option<f64>,
}

/// Four-metric by two-channel performance table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerformanceSummary {
    /// dB
    pub bmi_aligned: ChannelPair,
    /// dB
    pub bmi_cross: ChannelPair,
    /// mrad
    pub max_overshoot: ChannelPair,
    /// mrad
    pub jitter_static: ChannelPair,
    /// mrad
    pub jitter_dynamic: ChannelPair,
}

fn cell(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(x) => format!("{x:.digits$}"),
        None => "n/a".into(),
    }
}

fn jitter_cell(s: Option<f64>, d: Option<f64>) -> String {
    format!("{} ({})", cell(s, 2), cell(d, 2))
}

impl PerformanceSummary {
    fn rows(&self) -> [(&'static str, &'static str, String, String); 4] {
        [
            (
                "BMI, disturbance aligned with attenuation axis",
                "dB",
                cell(self.bmi_aligned.pitch, 1),
                cell(self.bmi_aligned.yaw, 1),
            ),
            (
                "BMI, disturbance cross-coupled with attenuation axis",
                "dB",
                cell(self.bmi_cross.pitch, 1),
                cell(self.bmi_cross.yaw, 1),
            ),
            (
                "Maximum track overshoot",
                "mrad",
                cell(self.max_overshoot.pitch, 1),
                cell(self.max_overshoot.yaw, 1),
            ),
            (
                "Maximum stationary (dynamic) jitter",
                "mrad",
                jitter_cell(self.jitter_static.pitch, self.jitter_dynamic.pitch),
                jitter_cell(self.jitter_static.yaw, self.jitter_dynamic.yaw),
            ),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<54} {:>16} {:>16}", "Metric", "Pitch channel", "Yaw channel");
        for (name, unit, p, y) in self.rows() {
            let _ = writeln!(out, "{:<54} {:>16} {:>16}", format!("{name} ({unit})"), p, y);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,unit,pitch,yaw\n");
        for (name, unit, p, y) in self.rows() {
            let _ = writeln!(out, "\"{name}\",{unit},{p},{y}");
        }
        out
    }
}
