//! Plant parameters, the cycle-averaged receiver model and its
//! small-signal linearization.
//!
//! State order is fixed throughout the crate as `(v_dc, i_l, v_o)`.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Constants of the receiver plant. SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverParams {
    /// Switching frequency, synchronized with the resonant receiver current (Hz).
    pub f: f64,
    /// Amplitude of the sinusoidal receiver coil current (A).
    pub i_ls_amp: f64,
    /// DC-link capacitance (F).
    pub c_dc: f64,
    /// Buck inductance (H).
    pub l: f64,
    /// Output capacitance (F).
    pub c_o: f64,
    /// Load resistance (Ω).
    pub r: f64,
    /// Nominal duty ratio.
    pub d_nom: f64,
}

impl ReceiverParams {
    /// Validated constructor.
    pub fn new(f: f64, i_ls_amp: f64, c_dc: f64, l: f64, c_o: f64, r: f64, d_nom: f64) -> Result<Self> {
        let p = Self {
            f,
            i_ls_amp,
            c_dc,
            l,
            c_o,
            r,
            d_nom,
        };
        p.validate()?;
        Ok(p)
    }

    /// The 200 kHz, 1 A prototype: C_DC = 30 µF, L = 77 µH, C_o = 40 µF,
    /// R = 7 Ω, D = 0.5.
    pub fn prototype() -> Self {
        Self {
            f: 200e3,
            i_ls_amp: 1.0,
            c_dc: 30e-6,
            l: 77e-6,
            c_o: 40e-6,
            r: 7.0,
            d_nom: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f", self.f),
            ("i_ls_amp", self.i_ls_amp),
            ("c_dc", self.c_dc),
            ("l", self.l),
            ("c_o", self.c_o),
            ("r", self.r),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParam {
                    name,
                    value,
                    rule: "must be finite and strictly positive",
                });
            }
        }
        check_open_duty(self.d_nom)
    }

    /// Switching period T = 1/f.
    pub fn period(&self) -> f64 {
        1.0 / self.f
    }

    /// Copy with a different nominal duty.
    pub fn with_duty(&self, d_nom: f64) -> Result<Self> {
        let p = Self { d_nom, ..*self };
        p.validate()?;
        Ok(p)
    }

    /// Mean of the rectified receiver current, `2·I_Ls/π`.
    pub fn rectified_mean(&self) -> f64 {
        2.0 * self.i_ls_amp / PI
    }
}

pub(crate) fn check_open_duty(d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 && d < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDuty(d, "(0, 1)"))
    }
}

pub(crate) fn check_closed_duty(d: f64) -> Result<()> {
    if (0.0..=1.0).contains(&d) {
        Ok(())
    } else {
        Err(Error::InvalidDuty(d, "[0, 1]"))
    }
}

/// Cycle-averaged state, or its time derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AvgState {
    pub v_dc: f64,
    pub i_l: f64,
    pub v_o: f64,
}

impl AvgState {
    pub fn new(v_dc: f64, i_l: f64, v_o: f64) -> Self {
        Self { v_dc, i_l, v_o }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.v_dc, self.i_l, self.v_o]
    }
}

/// DC operating point of the averaged model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub v_dc_ss: f64,
    pub i_l_ss: f64,
    pub v_o_ss: f64,
    pub d: f64,
}

impl OperatingPoint {
    pub fn as_state(&self) -> AvgState {
        AvgState::new(self.v_dc_ss, self.i_l_ss, self.v_o_ss)
    }
}

/// Equilibrium of the averaged model at the nominal duty.
pub fn steady_state(params: &ReceiverParams) -> Result<OperatingPoint> {
    params.validate()?;
    Ok(operating_point_at(params, params.d_nom))
}

/// Equilibrium at an arbitrary duty in (0, 1].
///
/// `d = 1` connects the rectifier straight to the load; the plant itself
/// still requires a nominal duty strictly inside (0, 1).
pub fn steady_state_at(params: &ReceiverParams, d: f64) -> Result<OperatingPoint> {
    if !(d.is_finite() && d > 0.0 && d <= 1.0) {
        return Err(Error::InvalidDuty(d, "(0, 1]"));
    }
    Ok(operating_point_at(params, d))
}

fn operating_point_at(params: &ReceiverParams, d: f64) -> OperatingPoint {
    let i_l = params.rectified_mean() / d;
    let v_o = params.r * i_l;
    OperatingPoint {
        v_dc_ss: v_o / d,
        i_l_ss: i_l,
        v_o_ss: v_o,
        d,
    }
}

/// Right-hand side of the cycle-averaged model.
pub fn averaged_derivatives(state: &AvgState, d: f64, params: &ReceiverParams) -> Result<AvgState> {
    check_closed_duty(d)?;
    Ok(AvgState {
        v_dc: (params.rectified_mean() - d * state.i_l) / params.c_dc,
        i_l: (d * state.v_dc - state.v_o) / params.l,
        v_o: (state.i_l - state.v_o / params.r) / params.c_o,
    })
}

/// Linearized model `ẋ = A·x + B·d̃` about the nominal operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallSignalSS {
    pub a_matrix: [[f64; 3]; 3],
    pub b_vector: [f64; 3],
}

impl SmallSignalSS {
    pub fn trace(&self) -> f64 {
        (0..3).map(|k| self.a_matrix[k][k]).sum()
    }

    /// Eigenvalues of the state matrix (rad/s), sorted by real part then
    /// imaginary part.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let a = &self.a_matrix;
        let m = Matrix3::new(
            a[0][0], a[0][1], a[0][2], a[1][0], a[1][1], a[1][2], a[2][0], a[2][1], a[2][2],
        );
        let mut eig: Vec<Complex64> = m
            .complex_eigenvalues()
            .iter()
            .map(|z| Complex64::new(z.re, z.im))
            .collect();
        eig.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        eig
    }
}

/// Small-signal state-space model about `steady_state(params)`.
pub fn linearize(params: &ReceiverParams) -> Result<SmallSignalSS> {
    let op = steady_state(params)?;
    let d = params.d_nom;
    let ReceiverParams { c_dc, l, c_o, r, .. } = *params;
    Ok(SmallSignalSS {
        a_matrix: [
            [0.0, -d / c_dc, 0.0],
            [d / l, 0.0, -1.0 / l],
            [0.0, 1.0 / c_o, -1.0 / (r * c_o)],
        ],
        b_vector: [-op.i_l_ss / c_dc, op.v_dc_ss / l, 0.0],
    })
}
