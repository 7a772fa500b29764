use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use super::poly::Polynomial;
use crate::error::{Error, Result};

/// Which signal a transfer function describes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TfLabel {
    DcLink,
    InductorCurrent,
    OutputVoltage,
    User(String),
}

impl fmt::Display for TfLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TfLabel::DcLink => write!(f, "dc-link"),
            TfLabel::InductorCurrent => write!(f, "inductor-current"),
            TfLabel::OutputVoltage => write!(f, "output-voltage"),
            TfLabel::User(s) => write!(f, "{s}"),
        }
    }
}

/// Ratio of two real polynomials in the Laplace variable.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTF {
    pub num: Polynomial,
    pub den: Polynomial,
    pub label: TfLabel,
}

impl RationalTF {
    pub fn new(num: Polynomial, den: Polynomial, label: TfLabel) -> Self {
        Self { num, den, label }
    }

    pub fn user(num: Polynomial, den: Polynomial, name: &str) -> Self {
        Self::new(num, den, TfLabel::User(name.to_string()))
    }

    pub fn gain(k: f64) -> Self {
        Self::user(Polynomial::constant(k), Polynomial::constant(1.0), "gain")
    }

    pub fn eval_s(&self, s: Complex64) -> Complex64 {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }

    /// Frequency response at `f_hz`, i.e. the value at `s = j·2π·f_hz`.
    pub fn eval_hz(&self, f_hz: f64) -> Result<Complex64> {
        let s = Complex64::new(0.0, 2.0 * PI * f_hz);
        let den = self.den.eval_complex(s);
        if den.norm() == 0.0 || !den.norm().is_finite() {
            return Err(Error::SingularEval(f_hz));
        }
        Ok(self.num.eval_complex(s) / den)
    }

    /// Value at `s = 0`, `None` when the denominator vanishes there.
    pub fn dc_gain(&self) -> Option<f64> {
        let d = self.den.coeff(0);
        (d != 0.0).then(|| self.num.coeff(0) / d)
    }

    /// Low-frequency asymptote `c·s^m` as `(m, c)`; `None` for a zero numerator.
    ///
    /// `m` counts zeros at the origin minus poles at the origin.
    pub fn low_frequency_asymptote(&self) -> Option<(i32, f64)> {
        let kn = self.num.low_order()?;
        let kd = self.den.low_order()?;
        Some((kn as i32 - kd as i32, self.num.coeff(kn) / self.den.coeff(kd)))
    }

    /// Phase (degrees) of the low-frequency asymptote: `m·90°`, shifted by
    /// −180° when the asymptote coefficient is negative.
    pub fn low_frequency_phase_deg(&self) -> Option<f64> {
        self.low_frequency_asymptote()
            .map(|(m, c)| 90.0 * m as f64 - if c < 0.0 { 180.0 } else { 0.0 })
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.num.scale(k), self.den.clone(), self.label.clone())
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Series connection (polynomial products, no cancellation).
    pub fn series(&self, other: &RationalTF) -> Self {
        Self::user(&self.num * &other.num, &self.den * &other.den, "series")
    }

    pub fn with_label(mut self, label: TfLabel) -> Self {
        self.label = label;
        self
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        self.num.roots()
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        self.den.roots()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymptote_and_phase() {
        // -3/(s·(s+1))
        let tf = RationalTF::user(
            Polynomial::constant(-3.0),
            Polynomial::new(vec![0.0, 1.0, 1.0]),
            "t",
        );
        assert_eq!(tf.low_frequency_asymptote(), Some((-1, -3.0)));
        assert_eq!(tf.low_frequency_phase_deg(), Some(-270.0));
        assert_eq!(tf.dc_gain(), None);
        assert!(tf.eval_hz(0.0).is_err());
    }

    #[test]
    fn constant_tf() {
        let p = Polynomial::new(vec![2.0, 5.0]);
        let tf = RationalTF::user(p.clone(), p, "unit");
        let v = tf.eval_hz(123.0).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(tf.dc_gain(), Some(1.0));
        assert_eq!(tf.low_frequency_phase_deg(), Some(0.0));
    }

    #[test]
    fn series_multiplies() {
        let a = RationalTF::user(Polynomial::constant(2.0), Polynomial::new(vec![1.0, 1.0]), "a");
        let b = RationalTF::user(Polynomial::new(vec![0.0, 1.0]), Polynomial::constant(4.0), "b");
        let s = Complex64::new(0.3, 2.0);
        let prod = a.series(&b);
        assert!((prod.eval_s(s) - a.eval_s(s) * b.eval_s(s)).norm() < 1e-14);
    }
}
