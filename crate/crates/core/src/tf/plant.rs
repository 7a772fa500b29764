//! Closed-form duty-to-state transfer functions of the receiver plant.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::poly::Polynomial;
use super::rational::{RationalTF, TfLabel};
use crate::error::Result;
use crate::model::ReceiverParams;

/// Characteristic cubic shared by all three plant transfer functions:
/// `C_o·C_DC·L·R·s³ + C_DC·L·s² + (C_o·R·D² + C_DC·R)·s + D²`.
pub fn shared_denominator(params: &ReceiverParams) -> Result<Polynomial> {
    params.validate()?;
    let ReceiverParams { c_dc, l, c_o, r, d_nom: d, .. } = *params;
    Ok(Polynomial::new(vec![
        d * d,
        c_o * r * d * d + c_dc * r,
        c_dc * l,
        c_o * c_dc * l * r,
    ]))
}

/// DC-link voltage response to duty, `ṽ_DC/d̃`.
pub fn tf_vdc(params: &ReceiverParams) -> Result<RationalTF> {
    let den = shared_denominator(params)?;
    let ReceiverParams { i_ls_amp, l, c_o, r, d_nom: d, .. } = *params;
    let k = -2.0 * i_ls_amp / (PI * d);
    let num = Polynomial::new(vec![2.0 * r, c_o * r * r + l, c_o * l * r]).scale(k);
    Ok(RationalTF::new(num, den, TfLabel::DcLink))
}

/// Inductor current response to duty, `ĩ_L/d̃`.
pub fn tf_il(params: &ReceiverParams) -> Result<RationalTF> {
    let den = shared_denominator(params)?;
    let ReceiverParams { i_ls_amp, c_dc, c_o, r, d_nom: d, .. } = *params;
    let k = 2.0 * i_ls_amp / (PI * d * d);
    let rhp = Polynomial::new(vec![-d * d, c_dc * r]);
    let lhp = Polynomial::new(vec![1.0, c_o * r]);
    Ok(RationalTF::new((&rhp * &lhp).scale(k), den, TfLabel::InductorCurrent))
}

/// Output voltage response to duty, `ṽ_o/d̃`.
pub fn tf_vo(params: &ReceiverParams) -> Result<RationalTF> {
    let den = shared_denominator(params)?;
    let ReceiverParams { i_ls_amp, c_dc, r, d_nom: d, .. } = *params;
    let k = 2.0 * r * i_ls_amp / (PI * d * d);
    let num = Polynomial::new(vec![-d * d, c_dc * r]).scale(k);
    Ok(RationalTF::new(num, den, TfLabel::OutputVoltage))
}

/// The two zeros of `ṽ_DC/d̃` by the quadratic formula, `+√` root first.
///
/// When `(C_o·R² + L)² < 8·C_o·R²·L` the pair is complex conjugate.
pub fn closed_form_zeros_vdc(params: &ReceiverParams) -> Result<[Complex64; 2]> {
    params.validate()?;
    let ReceiverParams { l, c_o, r, .. } = *params;
    let b = c_o * r * r + l;
    let disc = Complex64::new(b * b - 8.0 * c_o * r * r * l, 0.0).sqrt();
    let denom = 2.0 * c_o * l * r;
    Ok([(-b + disc) / denom, (-b - disc) / denom])
}

/// Zeros of `ĩ_L/d̃` as `(rhp_zero, lhp_zero)` = `(D²/(C_DC·R), −1/(C_o·R))`.
pub fn closed_form_zeros_il(params: &ReceiverParams) -> Result<(f64, f64)> {
    params.validate()?;
    Ok((rhp_zero(params), -1.0 / (params.c_o * params.r)))
}

/// The single zero of `ṽ_o/d̃`, `D²/(C_DC·R)`.
pub fn closed_form_zero_vo(params: &ReceiverParams) -> Result<f64> {
    params.validate()?;
    Ok(rhp_zero(params))
}

fn rhp_zero(params: &ReceiverParams) -> f64 {
    params.d_nom * params.d_nom / (params.c_dc * params.r)
}

/// Second-order control-to-output model of a buck converter fed from an
/// ideal voltage source: `V_in / (1 + (L/R)·s + L·C_o·s²)`.
pub fn voltage_source_buck_tf(v_in: f64, l: f64, c_o: f64, r: f64) -> Result<RationalTF> {
    for (name, value) in [("v_in", v_in), ("l", l), ("c_o", c_o), ("r", r)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(crate::Error::InvalidParam {
                name,
                value,
                rule: "must be finite and strictly positive",
            });
        }
    }
    Ok(RationalTF::user(
        Polynomial::constant(v_in),
        Polynomial::new(vec![1.0, l / r, l * c_o]),
        "voltage-source-buck",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::steady_state;

    fn proto() -> ReceiverParams {
        ReceiverParams::prototype()
    }

    fn db(z: Complex64) -> f64 {
        20.0 * z.norm().log10()
    }

    #[test]
    fn shared_denominator_is_shared() {
        let p = proto();
        let (a, b, c) = (tf_vdc(&p).unwrap(), tf_il(&p).unwrap(), tf_vo(&p).unwrap());
        assert_eq!(a.den, b.den);
        assert_eq!(b.den, c.den);
        assert_eq!(a.den.coeff(0), 0.25);
    }

    #[test]
    fn dc_values() {
        let p = proto();
        // -4·R·I_Ls/(π·D³) and -2·R·I_Ls/(π·D²)
        let g_vdc0 = tf_vdc(&p).unwrap().dc_gain().unwrap();
        assert!((g_vdc0 - (-4.0 * 7.0 / (PI * 0.125))).abs() < 1e-12 * g_vdc0.abs());
        let g_vo0 = tf_vo(&p).unwrap().dc_gain().unwrap();
        assert!((g_vo0 + 17.825353626292278).abs() < 1e-12);
        assert!((db(Complex64::new(g_vo0, 0.0)) - 25.02).abs() < 0.01);
    }

    #[test]
    fn closed_form_il_values() {
        let (z_rhp, z_lhp) = closed_form_zeros_il(&proto()).unwrap();
        assert!((z_rhp - 1190.4761904761904).abs() < 1e-9);
        assert!((z_lhp + 3571.4285714285716).abs() < 1e-9);
        assert_eq!(closed_form_zero_vo(&proto()).unwrap(), z_rhp);

        let doubled_d = ReceiverParams { d_nom: 0.25, ..proto() };
        let (z_small, _) = closed_form_zeros_il(&doubled_d).unwrap();
        assert!((z_rhp / z_small - 4.0).abs() < 1e-12);
        let doubled_c = ReceiverParams { c_dc: 60e-6, ..proto() };
        assert!((closed_form_zero_vo(&doubled_c).unwrap() * 2.0 - z_rhp).abs() < 1e-9);
    }

    #[test]
    fn closed_form_vdc_values() {
        let [z1, z2] = closed_form_zeros_vdc(&proto()).unwrap();
        assert_eq!(z1.im, 0.0);
        assert!((z1.re + 7462.23).abs() < 0.01, "{z1}");
        assert!((z2.re + 87018.29).abs() < 0.01, "{z2}");
    }

    #[test]
    fn closed_form_vdc_complex_branch() {
        // (C_o·R² + L)² < 8·C_o·R²·L when C_o·R² ≈ L
        let p = ReceiverParams { c_o: 77e-6 / 49.0, ..proto() };
        let [z1, z2] = closed_form_zeros_vdc(&p).unwrap();
        assert!(z1.im != 0.0 && z1 == z2.conj() && z1.re < 0.0);
        let mut from_roots = tf_vdc(&p).unwrap().zeros().unwrap();
        from_roots.sort_by(|a, b| b.im.total_cmp(&a.im));
        assert!((from_roots[0] - z1).norm() < 1e-9 * z1.norm());
    }

    #[test]
    fn two_khz_values() {
        let p = proto();
        let f = 2000.0;
        let vdc = tf_vdc(&p).unwrap().eval_hz(f).unwrap();
        let il = tf_il(&p).unwrap().eval_hz(f).unwrap();
        let vo = tf_vo(&p).unwrap().eval_hz(f).unwrap();
        // Direct evaluation of the closed forms (numpy polyval reference).
        assert!((db(vdc) - 23.9517).abs() < 1e-3, "{}", db(vdc));
        assert!((vdc.arg().to_degrees() - 154.5746).abs() < 1e-3);
        assert!((db(il) - 20.8536).abs() < 1e-3);
        assert!((il.arg().to_degrees() - 76.6065).abs() < 1e-3);
        assert!((db(vo) - 26.4909).abs() < 1e-3);
        assert!((vo.arg().to_degrees() - 2.4720).abs() < 1e-3);
    }

    #[test]
    fn vo_over_il_is_load_impedance() {
        let p = proto();
        let (il, vo) = (tf_il(&p).unwrap(), tf_vo(&p).unwrap());
        for f in [3.0, 170.0, 1190.0 / (2.0 * PI), 4321.0, 55e3] {
            let s = Complex64::new(0.0, 2.0 * PI * f);
            let ratio = vo.eval_s(s) / il.eval_s(s);
            let z = p.r / (1.0 + s * p.c_o * p.r);
            assert!((ratio - z).norm() < 1e-12 * z.norm());
        }
    }

    #[test]
    fn real_zero_does_not_null_jw_response() {
        let vo = tf_vo(&proto()).unwrap();
        let z = closed_form_zero_vo(&proto()).unwrap();
        assert!(vo.eval_hz(z / (2.0 * PI)).unwrap().norm() > 1.0);
    }

    #[test]
    fn voltage_source_reference() {
        let v_in = steady_state(&proto()).unwrap().v_dc_ss;
        let tf = voltage_source_buck_tf(v_in, 77e-6, 40e-6, 7.0).unwrap();
        assert!((tf.dc_gain().unwrap() - 17.825353626292278).abs() < 1e-12);
        assert!(tf.zeros().unwrap().is_empty());
        let slope = db(tf.eval_hz(1e6).unwrap()) - db(tf.eval_hz(1e5).unwrap());
        assert!((slope + 40.0).abs() < 0.1);
        assert!(voltage_source_buck_tf(0.0, 1.0, 1.0, 1.0).is_err());
    }
}
