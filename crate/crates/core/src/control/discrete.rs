use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::tf::{poly_add, poly_mul, poly_pow_binomial, poly_scale, TransferFunction};
use crate::error::{IspError, Result};

/// Difference-equation coefficients in powers of `z^-1`; `a[0]` is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteCoefficients {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub sample_period: f64,
}

impl DiscreteCoefficients {
    pub fn validate(&self, key: &str) -> Result<()> {
        if !(self.sample_period.is_finite() && self.sample_period > 0.0) {
            return Err(IspError::config(format!("{key}.sample_period"), "must be > 0"));
        }
        if self.a.is_empty() || self.a[0] != 1.0 {
            return Err(IspError::config(format!("{key}.a"), "must start with 1"));
        }
        if self.b.is_empty() || self.b.len() > self.a.len() {
            return Err(IspError::config(
                format!("{key}.b"),
                "must be non-empty and no longer than `a`",
            ));
        }
        if self.a.iter().chain(self.b.iter()).any(|c| !c.is_finite()) {
            return Err(IspError::config(key, "coefficients must be finite"));
        }
        Ok(())
    }

    /// Gain at z = 1.
    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// `H(e^{jωTs})` at `f` Hz.
    pub fn at_hz(&self, f: f64) -> Complex64 {
        let zi = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * self.sample_period);
        let eval = |c: &[f64]| {
            c.iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, x| acc * zi + x)
        };
        eval(&self.b) / eval(&self.a)
    }

    /// Roots of the characteristic polynomial in z.
    pub fn poles(&self) -> Vec<Complex64> {
        super::freq::poly_roots(&self.a)
    }
}

/// Bilinear transform with `s = (2/Ts)(z − 1)/(z + 1)`.
pub fn tustin_discretize(tf: &TransferFunction, ts: f64) -> Result<DiscreteCoefficients> {
    if !(ts.is_finite() && ts > 0.0) {
        return Err(IspError::Discretization(format!("sample period must be > 0, got {ts}")));
    }
    let n = tf.order();
    let c = 2.0 / ts;
    // Σ p_k s^k -> Σ p_k c^k (z−1)^k (z+1)^(n−k), coefficients in descending z
    let map = |p: &[f64]| {
        let mut out = vec![0.0; n + 1];
        for (i, coef) in p.iter().enumerate() {
            let k = p.len() - 1 - i;
            let term = poly_mul(&poly_pow_binomial(-1.0, k), &poly_pow_binomial(1.0, n - k));
            out = poly_add(&out, &poly_scale(&term, coef * c.powi(k as i32)));
        }
        out
    };
    let num = map(tf.num());
    let den = map(tf.den());
    let a0 = den[0];
    let scale = den.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if a0.abs() <= 1e-14 * scale || !a0.is_finite() {
        return Err(IspError::Discretization(
            "leading denominator coefficient vanishes (pole at s = 2/Ts)".into(),
        ));
    }
    Ok(DiscreteCoefficients {
        b: num.iter().map(|x| x / a0).collect(),
        a: den.iter().map(|x| x / a0).collect(),
        sample_period: ts,
    })
}

/// Direct-form-I runtime with output clamp and optional back-calculation
/// anti-windup.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteController {
    coeffs: DiscreteCoefficients,
    x_hist: Vec<f64>,
    y_hist: Vec<f64>,
    limits: Option<(f64, f64)>,
    anti_windup: bool,
}

impl DiscreteController {
    pub fn new(coeffs: DiscreteCoefficients, limits: Option<(f64, f64)>, anti_windup: bool) -> Result<Self> {
        coeffs.validate("controller")?;
        if let Some((lo, hi)) = limits {
            if !(lo < hi) {
                return Err(IspError::config("controller.limit", "lower limit must be below upper"));
            }
        }
        let n = coeffs.a.len() - 1;
        Ok(Self {
            x_hist: vec![0.0; coeffs.b.len().saturating_sub(1)],
            y_hist: vec![0.0; n],
            coeffs,
            limits,
            anti_windup,
        })
    }

    pub fn gain(k: f64, ts: f64) -> Self {
        Self::new(
            DiscreteCoefficients { b: vec![k], a: vec![1.0], sample_period: ts },
            None,
            false,
        )
        .expect("valid gain")
    }

    pub fn with_symmetric_limit(coeffs: DiscreteCoefficients, limit: f64, anti_windup: bool) -> Result<Self> {
        Self::new(coeffs, Some((-limit, limit)), anti_windup)
    }

    pub fn coefficients(&self) -> &DiscreteCoefficients {
        &self.coeffs
    }

    pub fn sample_period(&self) -> f64 {
        self.coeffs.sample_period
    }

    pub fn reset(&mut self) {
        self.x_hist.iter_mut().for_each(|x| *x = 0.0);
        self.y_hist.iter_mut().for_each(|y| *y = 0.0);
    }

    /// Advances one sample and returns the (clamped) output.
    pub fn update(&mut self, input: f64) -> Result<f64> {
        if !input.is_finite() {
            return Err(IspError::NonFiniteInput(input));
        }
        let b = &self.coeffs.b;
        let a = &self.coeffs.a;
        let mut y = b[0] * input;
        for (bi, x) in b[1..].iter().zip(&self.x_hist) {
            y += bi * x;
        }
        for (ai, yp) in a[1..].iter().zip(&self.y_hist) {
            y -= ai * yp;
        }
        let out = match self.limits {
            Some((lo, hi)) => y.clamp(lo, hi),
            None => y,
        };
        if !self.x_hist.is_empty() {
            self.x_hist.rotate_right(1);
            self.x_hist[0] = input;
        }
        if !self.y_hist.is_empty() {
            self.y_hist.rotate_right(1);
            self.y_hist[0] = if self.anti_windup { out } else { y };
        }
        Ok(out)
    }
}
