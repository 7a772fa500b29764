use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::plant::tf_vo;
use super::{pole_zero_map, PoleZeroSet};
use crate::error::{Error, Result};
use crate::model::ReceiverParams;

/// Plant constant varied by [`parameter_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    CDc,
    DNom,
    R,
    ILsAmp,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::CDc => "c_dc",
            SweepAxis::DNom => "d_nom",
            SweepAxis::R => "r",
            SweepAxis::ILsAmp => "i_ls_amp",
        }
    }

    pub fn apply(self, params: &ReceiverParams, value: f64) -> Result<ReceiverParams> {
        let mut p = *params;
        match self {
            SweepAxis::CDc => p.c_dc = value,
            SweepAxis::DNom => p.d_nom = value,
            SweepAxis::R => p.r = value,
            SweepAxis::ILsAmp => p.i_ls_amp = value,
        }
        p.validate().map_err(|e| Error::InvalidSweep {
            axis: self.name(),
            value,
            reason: e.to_string(),
        })?;
        Ok(p)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "c_dc" => Ok(SweepAxis::CDc),
            "d_nom" | "d" => Ok(SweepAxis::DNom),
            "r" => Ok(SweepAxis::R),
            "i_ls_amp" => Ok(SweepAxis::ILsAmp),
            other => Err(format!("unknown sweep axis '{other}' (expected c_dc, d_nom, r or i_ls_amp)")),
        }
    }
}

/// Output-voltage pole-zero map and DC gain at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub pz: PoleZeroSet,
    /// |G_vo(0)| in dB.
    pub dc_gain_db: f64,
}

/// Analyze `ṽ_o/d̃` at each value of `axis`, results in input order.
pub fn parameter_sweep(params: &ReceiverParams, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepPoint>> {
    let plants = values
        .iter()
        .map(|&v| axis.apply(params, v))
        .collect::<Result<Vec<_>>>()?;
    plants
        .par_iter()
        .zip(values.par_iter())
        .map(|(p, &value)| {
            let tf = tf_vo(p)?;
            let dc = tf.dc_gain().expect("plant denominator is D² at s = 0");
            Ok(SweepPoint {
                value,
                pz: pole_zero_map(&tf)?,
                dc_gain_db: 20.0 * dc.abs().log10(),
            })
        })
        .collect()
}
