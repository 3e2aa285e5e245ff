use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{IspError, Result};

/// Polynomial coefficients, highest degree first.
pub type Poly = Vec<f64>;

fn trim(p: &[f64]) -> Poly {
    let first = p.iter().position(|c| *c != 0.0).unwrap_or(p.len().saturating_sub(1));
    if p.is_empty() {
        vec![0.0]
    } else {
        p[first..].to_vec()
    }
}

pub fn poly_mul(a: &[f64], b: &[f64]) -> Poly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_add(a: &[f64], b: &[f64]) -> Poly {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, x) in a.iter().rev().enumerate() {
        out[n - 1 - i] += x;
    }
    for (i, x) in b.iter().rev().enumerate() {
        out[n - 1 - i] += x;
    }
    out
}

pub fn poly_scale(a: &[f64], k: f64) -> Poly {
    a.iter().map(|c| c * k).collect()
}

pub fn poly_eval(p: &[f64], s: Complex64) -> Complex64 {
    p.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c)
}

/// `(x + c)^n`
pub fn poly_pow_binomial(c: f64, n: usize) -> Poly {
    (0..n).fold(vec![1.0], |acc, _| poly_mul(&acc, &[1.0, c]))
}

fn degree(p: &[f64]) -> usize {
    p.len() - 1
}

/// Rational transfer function in the Laplace variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    num: Poly,
    den: Poly,
}

impl TransferFunction {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(IspError::Design("transfer function coefficients must be finite".into()));
        }
        let num = trim(&num);
        let den = trim(&den);
        if den.iter().all(|c| *c == 0.0) {
            return Err(IspError::Design("denominator is identically zero".into()));
        }
        if degree(&num) > degree(&den) && num.iter().any(|c| *c != 0.0) {
            return Err(IspError::Design(format!(
                "improper transfer function: numerator degree {} exceeds denominator degree {}",
                degree(&num),
                degree(&den)
            )));
        }
        Ok(Self { num, den })
    }

    pub fn gain(k: f64) -> Self {
        Self { num: vec![k], den: vec![1.0] }
    }

    /// `1/s`
    pub fn integrator() -> Self {
        Self { num: vec![1.0], den: vec![1.0, 0.0] }
    }

    /// Unity-DC-gain first-order lag `p/(s + p)` with the pole in rad/s.
    pub fn first_order_lag(pole: f64) -> Self {
        Self { num: vec![pole], den: vec![1.0, pole] }
    }

    /// Padé approximant of a pure delay `e^{-s τ}`.
    pub fn pade_delay(tau: f64, order: usize) -> Self {
        if tau == 0.0 || order == 0 {
            return Self::gain(1.0);
        }
        let fact = |n: usize| (1..=n).fold(1.0f64, |a, k| a * k as f64);
        let n = order;
        let mut num = vec![0.0; n + 1];
        let mut den = vec![0.0; n + 1];
        for k in 0..=n {
            let c = fact(2 * n - k) * fact(n) / (fact(2 * n) * fact(k) * fact(n - k)) * tau.powi(k as i32);
            // index from highest degree
            num[n - k] = if k % 2 == 0 { c } else { -c };
            den[n - k] = c;
        }
        Self { num, den }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn order(&self) -> usize {
        degree(&self.den)
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    /// Response at `f` Hz.
    pub fn at_hz(&self, f: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, 2.0 * std::f64::consts::PI * f))
    }

    /// `H(0)`; infinite for free integrators.
    pub fn dc_gain(&self) -> f64 {
        let d = *self.den.last().unwrap();
        let n = *self.num.last().unwrap();
        n / d
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: poly_scale(&self.num, k),
            den: self.den.clone(),
        }
    }

    pub fn series(&self, other: &TransferFunction) -> Self {
        Self {
            num: trim(&poly_mul(&self.num, &other.num)),
            den: trim(&poly_mul(&self.den, &other.den)),
        }
    }

    /// Unity negative feedback closure `L / (1 + L)`.
    pub fn feedback(&self) -> Self {
        Self {
            num: self.num.clone(),
            den: trim(&poly_add(&self.den, &self.num)),
        }
    }

    /// Disturbance sensitivity `1 / (1 + L)`.
    pub fn sensitivity(&self) -> Self {
        Self {
            num: self.den.clone(),
            den: trim(&poly_add(&self.den, &self.num)),
        }
    }

    /// Controllable canonical state-space realisation `(A, B, C, D)` with the
    /// denominator normalised to be monic.
    pub fn state_space(&self) -> (nalgebra::DMatrix<f64>, nalgebra::DVector<f64>, nalgebra::DVector<f64>, f64) {
        let n = self.order();
        let a0 = self.den[0];
        let den: Vec<f64> = self.den.iter().map(|c| c / a0).collect();
        let mut num = vec![0.0; n + 1];
        let off = n + 1 - self.num.len();
        for (i, c) in self.num.iter().enumerate() {
            num[off + i] = c / a0;
        }
        let d = num[0];
        let mut a = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = 1.0;
        }
        let mut b = nalgebra::DVector::zeros(n);
        let mut c = nalgebra::DVector::zeros(n);
        if n > 0 {
            for j in 0..n {
                a[(n - 1, j)] = -den[n - j];
                c[j] = num[n - j] - den[n - j] * d;
            }
            b[n - 1] = 1.0;
        }
        (a, b, c, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_improper() {
        assert!(TransferFunction::new(vec![1.0, 0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(TransferFunction::new(vec![1.0], vec![0.0]).is_err());
        assert!(TransferFunction::new(vec![0.0, 1.0], vec![0.0, 1.0, 2.0]).is_ok());
    }

    #[test]
    fn feedback_of_integrator_is_first_order() {
        let t = TransferFunction::integrator().scale(3.0).feedback();
        assert_eq!(t.num(), &[3.0]);
        assert_eq!(t.den(), &[1.0, 3.0]);
        assert_abs_diff_eq!(t.dc_gain(), 1.0);
    }

    #[test]
    fn pade_has_unit_magnitude_and_matches_phase_at_low_frequency() {
        let tau = 0.2;
        let p = TransferFunction::pade_delay(tau, 3);
        for f in [0.01, 0.1, 0.5, 1.0] {
            let h = p.at_hz(f);
            assert_abs_diff_eq!(h.norm(), 1.0, epsilon = 1e-12);
            let w = 2.0 * std::f64::consts::PI * f;
            assert_abs_diff_eq!(h.arg(), -w * tau, epsilon = 1e-4);
        }
    }

    #[test]
    fn state_space_reproduces_response() {
        let tf = TransferFunction::new(vec![2.0, 3.0, 1.0], vec![1.0, 4.0, 5.0, 6.0]).unwrap();
        let (a, b, c, d) = tf.state_space();
        for f in [0.05, 0.3, 2.0] {
            let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f);
            let n = a.nrows();
            let m = nalgebra::DMatrix::<Complex64>::from_fn(n, n, |i, j| {
                (if i == j { s } else { Complex64::new(0.0, 0.0) }) - Complex64::new(a[(i, j)], 0.0)
            });
            let bx = nalgebra::DVector::<Complex64>::from_fn(n, |i, _| Complex64::new(b[i], 0.0));
            let x = m.lu().solve(&bx).unwrap();
            let y: Complex64 = (0..n).map(|i| x[i] * c[i]).sum::<Complex64>() + d;
            let h = tf.eval(s);
            assert_abs_diff_eq!(y.re, h.re, epsilon = 1e-12);
            assert_abs_diff_eq!(y.im, h.im, epsilon = 1e-12);
        }
    }
}
