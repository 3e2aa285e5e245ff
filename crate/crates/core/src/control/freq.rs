use std::f64::consts::PI;

use super::tf::TransferFunction;
use crate::error::{IspError, Result};

/// Scan range for crossing searches, Hz.
const SCAN_MIN_HZ: f64 = 1e-3;
const SCAN_MAX_HZ: f64 = 1e5;
const POINTS_PER_DECADE: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqPoint {
    pub freq_hz: f64,
    pub magnitude_db: f64,
    pub phase_deg: f64,
}

fn to_db(x: f64) -> f64 {
    20.0 * x.log10()
}

/// Magnitude and unwrapped phase at each frequency. Phase is unwrapped along
/// the list in the given order, so pass frequencies sorted ascending.
pub fn frequency_response(tf: &TransferFunction, freqs: &[f64]) -> Result<Vec<FreqPoint>> {
    let mut out = Vec::with_capacity(freqs.len());
    let mut prev: Option<f64> = None;
    for &f in freqs {
        if !(f.is_finite() && f > 0.0) {
            return Err(IspError::Design(format!("frequency must be positive, got {f}")));
        }
        let h = tf.at_hz(f);
        let mut ph = h.arg().to_degrees();
        if let Some(p) = prev {
            ph += 360.0 * ((p - ph) / 360.0).round();
        }
        prev = Some(ph);
        out.push(FreqPoint {
            freq_hz: f,
            magnitude_db: to_db(h.norm()),
            phase_deg: ph,
        });
    }
    Ok(out)
}

pub fn log_space(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    (0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}

fn scan_grid() -> Vec<f64> {
    log_space(SCAN_MIN_HZ, SCAN_MAX_HZ, POINTS_PER_DECADE)
}

/// Bisection on `g(f) = 0` in log-frequency between a bracketing pair.
fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    let glo = g(lo);
    for _ in 0..80 {
        let mid = (lo * hi).sqrt();
        if (g(mid) > 0.0) == (glo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    (lo * hi).sqrt()
}

/// Stability margins of an open loop `L(s)` under unity negative feedback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    /// First 0 dB crossing, Hz.
    pub crossover_hz: Option<f64>,
    /// Infinite when there is no gain crossover.
    pub phase_margin_deg: f64,
    /// First −180° phase crossing, Hz.
    pub phase_crossover_hz: Option<f64>,
    /// Infinite when the phase never reaches −180°.
    pub gain_margin_db: f64,
}

pub fn margins(open_loop: &TransferFunction) -> Margins {
    let grid = scan_grid();
    let resp = frequency_response(open_loop, &grid).expect("scan grid is positive");
    let mag = |f: f64| to_db(open_loop.at_hz(f).norm());

    let mut crossover = None;
    for w in resp.windows(2) {
        if w[0].magnitude_db > 0.0 && w[1].magnitude_db <= 0.0 {
            crossover = Some(bisect(w[0].freq_hz, w[1].freq_hz, mag));
            break;
        }
    }

    // unwrapped phase near a grid point, for refinement
    let phase_near = |f: f64, anchor: f64| {
        let p = open_loop.at_hz(f).arg().to_degrees();
        p + 360.0 * ((anchor - p) / 360.0).round()
    };

    let phase_margin_deg = match crossover {
        Some(fc) => {
            let anchor = interp_phase(&resp, fc);
            180.0 + phase_near(fc, anchor)
        }
        None => f64::INFINITY,
    };

    let mut phase_crossover = None;
    for w in resp.windows(2) {
        if w[0].phase_deg > -180.0 && w[1].phase_deg <= -180.0 {
            let anchor = w[0].phase_deg;
            phase_crossover = Some(bisect(w[0].freq_hz, w[1].freq_hz, |f| phase_near(f, anchor) + 180.0));
            break;
        }
    }
    let gain_margin_db = match phase_crossover {
        Some(fp) => -mag(fp),
        None => f64::INFINITY,
    };

    Margins {
        crossover_hz: crossover,
        phase_margin_deg,
        phase_crossover_hz: phase_crossover,
        gain_margin_db,
    }
}

fn interp_phase(resp: &[FreqPoint], f: f64) -> f64 {
    let i = resp.partition_point(|p| p.freq_hz < f).min(resp.len() - 1);
    resp[i].phase_deg
}

/// Closed-loop magnitude normalised to the DC gain, or to the gain at the
/// bottom of the scan when `T(0)` is zero or infinite.
fn normalised_mag(closed: &TransferFunction) -> impl Fn(f64) -> f64 + '_ {
    let exact = closed.dc_gain().abs();
    let dc = if exact.is_finite() && exact > 0.0 {
        exact
    } else {
        closed.at_hz(SCAN_MIN_HZ).norm()
    };
    move |f| closed.at_hz(f).norm() / dc
}

/// Frequency where the closed-loop magnitude first drops 3 dB below its
/// low-frequency value, Hz.
pub fn bandwidth(closed: &TransferFunction) -> Option<f64> {
    let rel = normalised_mag(closed);
    let target = 1.0 / 2f64.sqrt();
    let grid = scan_grid();
    for w in grid.windows(2) {
        if rel(w[0]) >= target && rel(w[1]) < target {
            return Some(bisect(w[0], w[1], |f| rel(f) - target));
        }
    }
    None
}

/// Peak of `|T(jω)| / |T(0)|` in dB, never below 0.
pub fn resonance_peak_db(closed: &TransferFunction) -> f64 {
    let rel = normalised_mag(closed);
    let grid = scan_grid();
    let (mut best_i, mut best) = (0, 0.0f64);
    for (i, &f) in grid.iter().enumerate() {
        let m = rel(f);
        if m > best {
            best = m;
            best_i = i;
        }
    }
    if best_i > 0 && best_i + 1 < grid.len() {
        // golden-section refinement in log frequency
        let (mut a, mut b) = (grid[best_i - 1].ln(), grid[best_i + 1].ln());
        let gr = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let c = b - gr * (b - a);
            let d = a + gr * (b - a);
            if rel(c.exp()) > rel(d.exp()) {
                b = d;
            } else {
                a = c;
            }
        }
        best = best.max(rel(((a + b) / 2.0).exp()));
    }
    to_db(best.max(1.0))
}

/// Closed-loop figures used when checking a design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopAnalysis {
    pub margins: Margins,
    pub bandwidth_hz: Option<f64>,
    pub resonance_db: f64,
    /// All closed-loop poles in the open left half plane.
    pub stable: bool,
}

pub fn analyze_loop(open_loop: &TransferFunction) -> LoopAnalysis {
    let closed = open_loop.feedback();
    LoopAnalysis {
        margins: margins(open_loop),
        bandwidth_hz: bandwidth(&closed),
        resonance_db: resonance_peak_db(&closed),
        stable: is_stable(closed.den()),
    }
}

/// Eigenvalues of the companion matrix all in the open left half plane.
pub fn is_stable(den: &[f64]) -> bool {
    poly_roots(den).iter().all(|r| r.re < 0.0)
}

pub fn poly_roots(p: &[f64]) -> Vec<num_complex::Complex64> {
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -p[j + 1] / p[0];
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

/// `ω` in rad/s for `f` in Hz.
pub fn hz_to_rad(f: f64) -> f64 {
    2.0 * PI * f
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn integrator_at_unit_frequency() {
        let r = frequency_response(&TransferFunction::integrator(), &[1.0 / (2.0 * PI)]).unwrap();
        assert_abs_diff_eq!(r[0].magnitude_db, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[0].phase_deg, -90.0, epsilon = 1e-12);
    }

    #[test]
    fn second_order_resonance() {
        let zeta: f64 = 0.5;
        let wn = 10.0;
        let t = TransferFunction::new(vec![wn * wn], vec![1.0, 2.0 * zeta * wn, wn * wn]).unwrap();
        let expected = 1.0 / (2.0 * zeta * (1.0 - zeta * zeta).sqrt());
        assert_abs_diff_eq!(expected, 1.1547, epsilon = 1e-4);
        assert_abs_diff_eq!(resonance_peak_db(&t), 20.0 * expected.log10(), epsilon = 1e-6);
        assert_abs_diff_eq!(resonance_peak_db(&t), 1.249, epsilon = 1e-3);
    }

    #[test]
    fn first_order_bandwidth() {
        let t = TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(bandwidth(&t).unwrap(), 1.0 / (2.0 * PI), epsilon = 1e-6);
        assert_abs_diff_eq!(bandwidth(&t).unwrap(), 0.1592, epsilon = 1e-4);
        assert_eq!(resonance_peak_db(&t), 0.0);
    }

    #[test]
    fn integrator_loop_margins() {
        let l = TransferFunction::integrator().scale(10.0);
        let m = margins(&l);
        assert_abs_diff_eq!(m.crossover_hz.unwrap(), 10.0 / (2.0 * PI), epsilon = 1e-9);
        assert_abs_diff_eq!(m.phase_margin_deg, 90.0, epsilon = 1e-9);
        assert!(m.gain_margin_db.is_infinite());
    }

    #[test]
    fn third_order_gain_margin() {
        // L = K / (s+1)^3 crosses -180° at ω = √3 where |L| = K/8
        let l = TransferFunction::new(vec![4.0], vec![1.0, 3.0, 3.0, 1.0]).unwrap();
        let m = margins(&l);
        assert_abs_diff_eq!(m.phase_crossover_hz.unwrap(), 3f64.sqrt() / (2.0 * PI), epsilon = 1e-9);
        assert_abs_diff_eq!(m.gain_margin_db, 20.0 * 2f64.log10(), epsilon = 1e-9);
    }

    #[test]
    fn constant_loop_has_unbounded_margins() {
        let m = margins(&TransferFunction::gain(1.0));
        assert!(m.crossover_hz.is_none());
        assert!(m.phase_margin_deg.is_infinite() && m.gain_margin_db.is_infinite());
    }

    #[test]
    fn rejects_non_positive_frequency() {
        assert!(frequency_response(&TransferFunction::integrator(), &[0.0]).is_err());
    }

    #[test]
    fn phase_is_unwrapped_through_delay() {
        let p = TransferFunction::pade_delay(0.1, 4).series(&TransferFunction::integrator());
        let r = frequency_response(&p, &log_space(0.1, 10.0, 100)).unwrap();
        assert!(r.windows(2).all(|w| w[1].phase_deg <= w[0].phase_deg + 1e-9));
        assert!(r.last().unwrap().phase_deg < -270.0);
    }
}
