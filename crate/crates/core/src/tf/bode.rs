use std::f64::consts::PI;

use num_complex::Complex64;

use super::rational::RationalTF;
use crate::error::{Error, Result};

/// Default Bode band and density.
pub const DEFAULT_F_LO: f64 = 1.0;
pub const DEFAULT_F_HI: f64 = 100e3;
pub const DEFAULT_POINTS_PER_DECADE: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqPoint {
    pub freq_hz: f64,
    pub mag_db: f64,
    /// Unwrapped phase in degrees.
    pub phase_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FreqResponse {
    pub points: Vec<FreqPoint>,
}

impl FreqResponse {
    pub fn freqs(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.freq_hz)
    }
}

/// Log-spaced grid from `f_lo` to `f_hi` inclusive.
pub fn log_grid(f_lo: f64, f_hi: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    if !(f_lo.is_finite() && f_hi.is_finite() && f_lo > 0.0 && f_lo < f_hi) {
        return Err(Error::InvalidGrid(format!("need 0 < f_lo < f_hi, got {f_lo}..{f_hi}")));
    }
    if points_per_decade == 0 {
        return Err(Error::InvalidGrid("points_per_decade must be positive".into()));
    }
    let decades = (f_hi / f_lo).log10();
    let n = ((decades * points_per_decade as f64).ceil() as usize).max(1);
    let (a, b) = (f_lo.log10(), f_hi.log10());
    Ok((0..=n)
        .map(|k| match k {
            0 => f_lo,
            k if k == n => f_hi,
            k => 10f64.powf(a + (b - a) * k as f64 / n as f64),
        })
        .collect())
}

/// Wrap an angle in degrees into (−180, 180].
pub fn wrap_deg(x: f64) -> f64 {
    let y = x.rem_euclid(360.0);
    if y > 180.0 {
        y - 360.0
    } else {
        y
    }
}

/// Representative of `raw + k·360` closest to `target`.
pub(crate) fn nearest_branch(raw: f64, target: f64) -> f64 {
    raw + 360.0 * ((target - raw) / 360.0).round()
}

/// Unwrapped phase (degrees) of `tf` over `freqs`, anchored at the
/// low-frequency asymptote phase and unwrapped upward in frequency.
///
/// A negative low-frequency gain anchors at −180°, each integrator adds
/// −90°. The unwrapped curve is cross-checked against the phase summed from
/// the pole and zero angles; a mismatch means two adjacent grid points are
/// too far apart to unwrap and is reported as [`Error::CoarseGrid`].
pub fn unwrapped_phase(tf: &RationalTF, freqs: &[f64]) -> Result<Vec<f64>> {
    let values = freqs
        .iter()
        .map(|&f| tf.eval_hz(f))
        .collect::<Result<Vec<_>>>()?;
    let Some(anchor) = tf.low_frequency_phase_deg() else {
        return Err(Error::ZeroPolynomial);
    };
    let mut out = Vec::with_capacity(freqs.len());
    for (k, v) in values.iter().enumerate() {
        let raw = v.arg().to_degrees();
        let target = if k == 0 { anchor } else { out[k - 1] };
        out.push(nearest_branch(raw, target));
    }

    let factor = factor_phase(tf, freqs)?;
    for k in 1..freqs.len() {
        let drift = (out[k] - out[0]) - (factor[k] - factor[0]);
        if drift.abs() > 90.0 {
            return Err(Error::CoarseGrid {
                f_a: freqs[k - 1],
                f_b: freqs[k],
            });
        }
    }
    Ok(out)
}

/// Continuous phase from the factored form, each factor `(jω − r)` taking a
/// branch that never jumps for `ω > 0` unless `r` lies on the imaginary axis.
fn factor_phase(tf: &RationalTF, freqs: &[f64]) -> Result<Vec<f64>> {
    let zeros = tf.zeros()?;
    let poles = tf.poles()?;
    let lead = (tf.num.leading() / tf.den.leading()).signum();
    let base = if lead < 0.0 { 180.0 } else { 0.0 };
    let angle = |w: f64, r: &Complex64| {
        let a = (w - r.im).atan2(-r.re).to_degrees();
        if r.re > 0.0 && a < 0.0 {
            a + 360.0
        } else {
            a
        }
    };
    Ok(freqs
        .iter()
        .map(|&f| {
            let w = 2.0 * PI * f;
            base + zeros.iter().map(|z| angle(w, z)).sum::<f64>()
                - poles.iter().map(|p| angle(w, p)).sum::<f64>()
        })
        .collect())
}

/// Magnitude (dB) and unwrapped phase (degrees) on a log-spaced grid.
pub fn bode(tf: &RationalTF, f_lo: f64, f_hi: f64, points_per_decade: usize) -> Result<FreqResponse> {
    let freqs = log_grid(f_lo, f_hi, points_per_decade)?;
    bode_at(tf, &freqs)
}

/// [`bode`] over the default 1 Hz – 100 kHz band at 48 points per decade.
pub fn bode_default(tf: &RationalTF) -> Result<FreqResponse> {
    bode(tf, DEFAULT_F_LO, DEFAULT_F_HI, DEFAULT_POINTS_PER_DECADE)
}

/// Bode data at caller-supplied, strictly increasing frequencies.
pub fn bode_at(tf: &RationalTF, freqs: &[f64]) -> Result<FreqResponse> {
    if freqs.windows(2).any(|w| !(w[0] < w[1])) || freqs.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::InvalidGrid("frequencies must be positive and strictly increasing".into()));
    }
    let phase = unwrapped_phase(tf, freqs)?;
    let points = freqs
        .iter()
        .zip(phase)
        .map(|(&f, phase_deg)| {
            let v = tf.eval_hz(f)?;
            Ok(FreqPoint {
                freq_hz: f,
                mag_db: 20.0 * v.norm().log10(),
                phase_deg,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FreqResponse { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ReceiverParams;
    use crate::tf::plant::{tf_vdc, tf_vo};
    use crate::tf::poly::Polynomial;

    #[test]
    fn grid_shape() {
        let g = log_grid(1.0, 100e3, 48).unwrap();
        assert_eq!(g.len(), 241);
        assert_eq!(g[0], 1.0);
        assert_eq!(*g.last().unwrap(), 100e3);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(log_grid(10.0, 1.0, 4).is_err());
        assert!(log_grid(0.0, 1.0, 4).is_err());
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_deg(180.0), 180.0);
        assert_eq!(wrap_deg(-180.0), 180.0);
        assert_eq!(wrap_deg(-190.0), 170.0);
        assert_eq!(wrap_deg(540.0), 180.0);
    }

    #[test]
    fn constant_tf_is_flat() {
        let p = Polynomial::new(vec![3.0, 1.0]);
        let tf = RationalTF::user(p.clone(), p, "one");
        for pt in bode_default(&tf).unwrap().points {
            assert!(pt.mag_db.abs() < 1e-12 && pt.phase_deg.abs() < 1e-9);
        }
    }

    #[test]
    fn output_voltage_has_two_half_turn_drops() {
        let tf = tf_vo(&ReceiverParams::prototype()).unwrap();
        let resp = bode_default(&tf).unwrap();
        let at = |f: f64| {
            resp.points
                .iter()
                .min_by(|a, b| (a.freq_hz / f).ln().abs().total_cmp(&(b.freq_hz / f).ln().abs()))
                .unwrap()
                .phase_deg
        };
        assert!((at(1.0) + 180.0).abs() < 1.0);
        // RHP zero plus real pole near 100–200 Hz, complex pair near 3.3 kHz.
        assert!((at(1.0) - at(1000.0) - 180.0).abs() < 25.0);
        assert!((at(1000.0) - at(100e3) - 180.0).abs() < 25.0);
        assert!((at(1.0) - at(100e3) - 360.0).abs() < 5.0);
    }

    #[test]
    fn dc_link_phase_recovers_at_lhp_zeros() {
        let tf = tf_vdc(&ReceiverParams::prototype()).unwrap();
        let resp = bode_default(&tf).unwrap();
        let slope: Vec<(f64, f64)> = resp
            .points
            .windows(2)
            .map(|w| (w[1].freq_hz, w[1].phase_deg - w[0].phase_deg))
            .collect();
        // Zeros at 7462 rad/s (~1.2 kHz) and 87018 rad/s (~13.8 kHz) push the
        // phase back up after the complex pole pair near 3.3 kHz.
        assert!(slope.iter().any(|&(f, d)| f > 8e3 && f < 30e3 && d > 0.0));
        assert!(slope.iter().any(|&(f, d)| f > 500.0 && f < 2e3 && d > 0.0));
    }

    #[test]
    fn coarse_grid_reported() {
        // Lightly damped pair: the phase drops 180° within a tiny band.
        let den = Polynomial::new(vec![1.0, 2.0 * 1e-4 / 1e3, 1.0 / 1e6]);
        let damped = Polynomial::new(vec![1.0, 2.0 * 0.1 / 1e3, 1.0 / 1e6]);
        let tf = RationalTF::user(Polynomial::new(vec![1.0]), damped, "damped");
        let sq = RationalTF::user(Polynomial::new(vec![1.0]), &den * &den, "resonant2");
        assert!(bode(&tf, 1.0, 1e5, 48).is_ok());
        assert!(matches!(bode(&sq, 1.0, 1e5, 1), Err(Error::CoarseGrid { .. })));
    }
}
