//! Rational transfer functions of the receiver plant and the tools to
//! analyze them: root finding, frequency response, pole-zero maps and
//! operating-point sweeps.

pub mod bode;
pub mod plant;
pub mod poly;
pub mod rational;
pub mod sweep;

use num_complex::Complex64;

pub use bode::{bode, bode_at, bode_default, log_grid, wrap_deg, FreqPoint, FreqResponse};
pub use plant::{
    closed_form_zero_vo, closed_form_zeros_il, closed_form_zeros_vdc, shared_denominator, tf_il, tf_vdc,
    tf_vo, voltage_source_buck_tf,
};
pub use poly::Polynomial;
pub use rational::{RationalTF, TfLabel};
pub use sweep::{parameter_sweep, SweepAxis, SweepPoint};

use crate::error::Result;

/// Roots of `p` in rad/s. See [`Polynomial::roots`].
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    p.roots()
}

/// `tf(j·2π·f_hz)`.
pub fn eval_tf(tf: &RationalTF, f_hz: f64) -> Result<Complex64> {
    tf.eval_hz(f_hz)
}

/// Poles and zeros of a transfer function, rad/s.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoleZeroSet {
    pub poles: Vec<Complex64>,
    pub zeros: Vec<Complex64>,
}

impl PoleZeroSet {
    /// Zeros with strictly positive real part.
    pub fn rhp_zeros(&self) -> impl Iterator<Item = &Complex64> {
        self.zeros.iter().filter(|z| z.re > 0.0)
    }
}

pub fn pole_zero_map(tf: &RationalTF) -> Result<PoleZeroSet> {
    Ok(PoleZeroSet {
        poles: tf.poles()?,
        zeros: tf.zeros()?,
    })
}
