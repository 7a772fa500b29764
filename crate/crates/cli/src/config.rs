//! Flat `key = value` configuration.
//!
//! One setting per line, `#` starts a comment, keys carry a dotted section
//! prefix (`plant.r = 7`). Plant keys may also be written bare (`r = 7`,
//! `d = 0.5`). All quantities are in SI base units. Lists are comma
//! separated. Later lines override earlier ones.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use wptrx_core::netan::ProbeConfig;
use wptrx_core::sim::{Signal, MIN_STEPS_PER_PERIOD};
use wptrx_core::tf::SweepAxis;
use wptrx_core::ReceiverParams;

use crate::error::{CliError, Location};
use crate::fmt_num;

/// The bundled configuration: the 200 kHz prototype and the default
/// settings of every command.
pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.cfg");

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitSpec {
    Steady,
    State { v_dc: f64, i_l: f64, v_o: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceSpec {
    Rectifier,
    Open,
    Voltage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Largest step; `None` means `T/500`.
    pub dt: Option<f64>,
    pub duration: f64,
    pub init: InitSpec,
    /// Constant duty; `None` means the plant's nominal duty.
    pub duty: Option<f64>,
    /// Duty after `t_step`; `None` keeps the duty constant.
    pub step_duty: Option<f64>,
    pub t_step: f64,
    pub source: SourceSpec,
    /// Keep every n-th integrator sample in trace.csv.
    pub record_every: usize,
    pub preroll: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: None,
            duration: 20e-3,
            init: InitSpec::Steady,
            duty: None,
            step_duty: None,
            t_step: 5e-3,
            source: SourceSpec::Rectifier,
            record_every: 50,
            preroll: wptrx_core::sim::DEFAULT_PREROLL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodeConfig {
    pub f_lo: f64,
    pub f_hi: f64,
    pub points_per_decade: usize,
}

impl Default for BodeConfig {
    fn default() -> Self {
        use wptrx_core::tf::bode::{DEFAULT_F_HI, DEFAULT_F_LO, DEFAULT_POINTS_PER_DECADE};
        Self {
            f_lo: DEFAULT_F_LO,
            f_hi: DEFAULT_F_HI,
            points_per_decade: DEFAULT_POINTS_PER_DECADE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis: SweepAxis::CDc,
            values: vec![10e-6, 20e-6, 30e-6, 40e-6, 50e-6, 60e-6, 70e-6, 80e-6, 90e-6, 100e-6],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantKind {
    Wpt,
    VoltageSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopKind {
    Single,
    Inner,
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Single,
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    GainStep,
    ReferenceStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlConfig {
    /// Single-loop PI gains.
    pub kp: f64,
    pub ki: f64,
    /// Dual-loop overrides; `None` takes the designed value.
    pub k_ivdc: Option<f64>,
    pub outer_kp: Option<f64>,
    pub outer_ki: Option<f64>,
    /// Voltage-source buck input; `None` means the operating-point `V_DC`.
    pub v_in: Option<f64>,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            kp: 0.1,
            ki: 10.0,
            k_ivdc: None,
            outer_kp: None,
            outer_ki: None,
            v_in: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginsConfig {
    pub loop_kind: LoopKind,
    pub plant: PlantKind,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Default for MarginsConfig {
    fn default() -> Self {
        Self {
            loop_kind: LoopKind::Outer,
            plant: PlantKind::Wpt,
            f_lo: 1.0,
            f_hi: 1e5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedLoopConfig {
    pub controller: ControllerKind,
    pub plant: PlantKind,
    pub scenario: ScenarioKind,
    /// Gain in force before a gain step; after it the configured gain applies.
    pub kp_before: f64,
    pub ref_step: f64,
    pub t_step: f64,
    pub duration: f64,
}

impl Default for ClosedLoopConfig {
    fn default() -> Self {
        Self {
            controller: ControllerKind::Single,
            plant: PlantKind::Wpt,
            scenario: ScenarioKind::GainStep,
            kp_before: 0.016,
            ref_step: 0.05,
            t_step: 5e-3,
            duration: 25e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolConfig {
    pub plant: ReceiverParams,
    /// Transfer function used by `tf`-family commands that show one signal.
    pub signal: Signal,
    pub bode: BodeConfig,
    pub sweep: SweepConfig,
    pub sim: SimConfig,
    /// `probe.d_nom` always mirrors `plant.d_nom`.
    pub probe: ProbeConfig,
    pub control: ControlConfig,
    pub margins: MarginsConfig,
    pub closedloop: ClosedLoopConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for ToolConfig {
    fn default() -> Self {
        let plant = ReceiverParams::prototype();
        Self {
            plant,
            signal: Signal::VO,
            bode: BodeConfig::default(),
            sweep: SweepConfig::default(),
            sim: SimConfig::default(),
            probe: ProbeConfig {
                d_nom: plant.d_nom,
                ..ProbeConfig::default()
            },
            control: ControlConfig::default(),
            margins: MarginsConfig::default(),
            closedloop: ClosedLoopConfig::default(),
            output_dir: None,
        }
    }
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $text),+ }
            }
        }
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($ty::$variant),)+
                    other => Err(format!(
                        "unknown value '{other}' (expected one of: {})",
                        [$($text),+].join(", ")
                    )),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(SourceSpec { Rectifier => "rectifier", Open => "open", Voltage => "voltage" });
keyword_enum!(PlantKind { Wpt => "wpt", VoltageSource => "voltage_source" });
keyword_enum!(LoopKind { Single => "single", Inner => "inner", Outer => "outer" });
keyword_enum!(ControllerKind { Single => "single", Dual => "dual" });
keyword_enum!(ScenarioKind { GainStep => "gain_step", ReferenceStep => "reference_step" });

fn canonical_key(key: &str) -> &str {
    match key {
        "f" => "plant.f",
        "i_ls_amp" => "plant.i_ls_amp",
        "c_dc" => "plant.c_dc",
        "l" => "plant.l",
        "c_o" => "plant.c_o",
        "r" => "plant.r",
        "d" | "d_nom" | "plant.d" => "plant.d_nom",
        other => other,
    }
}

fn number(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("'{v}' is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("'{v}' is not finite"))
    }
}

fn positive(v: &str) -> Result<f64, String> {
    let x = number(v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("{x} must be strictly positive"))
    }
}

fn non_negative(v: &str) -> Result<f64, String> {
    let x = number(v)?;
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("{x} must not be negative"))
    }
}

fn count(v: &str, min: usize) -> Result<usize, String> {
    let n: usize = v.parse().map_err(|_| format!("'{v}' is not a whole number"))?;
    if n >= min {
        Ok(n)
    } else {
        Err(format!("{n} is below the minimum {min}"))
    }
}

fn list(v: &str, each: fn(&str) -> Result<f64, String>) -> Result<Vec<f64>, String> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| each(x.trim())).collect()
}

fn keyword<T: FromStr<Err = String>>(v: &str) -> Result<T, String> {
    v.parse()
}

/// Check one plant constant in isolation so the diagnostic lands on its line.
fn plant_value(field: &str, v: &str) -> Result<f64, String> {
    let x = number(v)?;
    let mut p = ReceiverParams::prototype();
    match field {
        "f" => p.f = x,
        "i_ls_amp" => p.i_ls_amp = x,
        "c_dc" => p.c_dc = x,
        "l" => p.l = x,
        "c_o" => p.c_o = x,
        "r" => p.r = x,
        _ => p.d_nom = x,
    }
    p.validate().map_err(|e| e.to_string())?;
    Ok(x)
}

impl ToolConfig {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "plant.f" => self.plant.f = plant_value("f", v)?,
            "plant.i_ls_amp" => self.plant.i_ls_amp = plant_value("i_ls_amp", v)?,
            "plant.c_dc" => self.plant.c_dc = plant_value("c_dc", v)?,
            "plant.l" => self.plant.l = plant_value("l", v)?,
            "plant.c_o" => self.plant.c_o = plant_value("c_o", v)?,
            "plant.r" => self.plant.r = plant_value("r", v)?,
            "plant.d_nom" => self.plant.d_nom = plant_value("d_nom", v)?,

            "tf.signal" => self.signal = keyword(v)?,

            "bode.f_lo" => self.bode.f_lo = positive(v)?,
            "bode.f_hi" => self.bode.f_hi = positive(v)?,
            "bode.points_per_decade" => self.bode.points_per_decade = count(v, 1)?,

            "sweep.axis" => self.sweep.axis = keyword(v)?,
            "sweep.values" => self.sweep.values = list(v, number)?,

            "sim.dt" => self.sim.dt = Some(positive(v)?),
            "sim.duration" => self.sim.duration = positive(v)?,
            "sim.init" => {
                self.sim.init = if v == "steady" {
                    InitSpec::Steady
                } else {
                    match list(v, number)?.as_slice() {
                        &[v_dc, i_l, v_o] => InitSpec::State { v_dc, i_l, v_o },
                        _ => return Err(format!("'{v}' is neither 'steady' nor a v_dc, i_l, v_o triple")),
                    }
                }
            }
            "sim.duty" => self.sim.duty = Some(duty(v)?),
            "sim.step_duty" => self.sim.step_duty = Some(duty(v)?),
            "sim.t_step" => self.sim.t_step = non_negative(v)?,
            "sim.source" => self.sim.source = keyword(v)?,
            "sim.record_every" => self.sim.record_every = count(v, 1)?,
            "sim.preroll" => self.sim.preroll = non_negative(v)?,

            "probe.amp" => self.probe.amp = positive(v)?,
            "probe.freqs" => self.probe.freqs = list(v, positive)?,
            "probe.settle_periods" => self.probe.settle_periods = count(v, 0)? as u32,
            "probe.measure_periods" => self.probe.measure_periods = count(v, 4)? as u32,
            "probe.dt" => self.probe.dt_max = Some(positive(v)?),

            "control.kp" => self.control.kp = positive(v)?,
            "control.ki" => self.control.ki = non_negative(v)?,
            "control.k_ivdc" => self.control.k_ivdc = Some(positive(v)?),
            "control.outer_kp" => self.control.outer_kp = Some(positive(v)?),
            "control.outer_ki" => self.control.outer_ki = Some(non_negative(v)?),
            "control.v_in" => self.control.v_in = Some(positive(v)?),

            "margins.loop" => self.margins.loop_kind = keyword(v)?,
            "margins.plant" => self.margins.plant = keyword(v)?,
            "margins.f_lo" => self.margins.f_lo = positive(v)?,
            "margins.f_hi" => self.margins.f_hi = positive(v)?,

            "closedloop.controller" => self.closedloop.controller = keyword(v)?,
            "closedloop.plant" => self.closedloop.plant = keyword(v)?,
            "closedloop.scenario" => self.closedloop.scenario = keyword(v)?,
            "closedloop.kp_before" => self.closedloop.kp_before = positive(v)?,
            "closedloop.ref_step" => {
                let x = number(v)?;
                if x.abs() >= 1.0 {
                    return Err(format!("reference step {x} must lie in (-1, 1)"));
                }
                self.closedloop.ref_step = x;
            }
            "closedloop.t_step" => self.closedloop.t_step = non_negative(v)?,
            "closedloop.duration" => self.closedloop.duration = positive(v)?,

            "output.dir" => {
                if v.is_empty() {
                    return Err("output directory must not be empty".into());
                }
                self.output_dir = Some(PathBuf::from(v));
            }
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Checks that involve more than one key.
    fn cross_check(&self) -> Vec<(&'static str, String)> {
        let mut errs = Vec::new();
        let t = self.plant.period();
        if let Some(dt) = self.sim.dt {
            if dt > t / MIN_STEPS_PER_PERIOD as f64 {
                errs.push(("sim.dt", format!("{} exceeds T/{MIN_STEPS_PER_PERIOD} = {}", fmt_num(dt), fmt_num(t / MIN_STEPS_PER_PERIOD as f64))));
            }
        }
        if let Some(dt) = self.probe.dt_max {
            if dt > t / MIN_STEPS_PER_PERIOD as f64 {
                errs.push(("probe.dt", format!("{} exceeds T/{MIN_STEPS_PER_PERIOD} = {}", fmt_num(dt), fmt_num(t / MIN_STEPS_PER_PERIOD as f64))));
            }
        }
        if let Err(e) = self.probe.validate() {
            let key = match e {
                wptrx_core::Error::InvalidGrid(_) => "probe.freqs",
                _ => "probe.amp",
            };
            errs.push((key, e.to_string()));
        }
        if let Some(&f) = self.probe.freqs.iter().find(|&&f| f > self.plant.f / 2.0) {
            errs.push(("probe.freqs", format!("{f} Hz is above f/2")));
        }
        if self.bode.f_lo >= self.bode.f_hi {
            errs.push(("bode.f_hi", "bode.f_hi must exceed bode.f_lo".into()));
        }
        if self.margins.f_lo >= self.margins.f_hi {
            errs.push(("margins.f_hi", "margins.f_hi must exceed margins.f_lo".into()));
        }
        for &v in &self.sweep.values {
            if let Err(e) = self.sweep.axis.apply(&self.plant, v) {
                errs.push(("sweep.values", e.to_string()));
                break;
            }
        }
        if self.sim.step_duty.is_some() && self.sim.t_step >= self.sim.duration {
            errs.push(("sim.t_step", "sim.t_step must fall inside sim.duration".into()));
        }
        if self.closedloop.t_step >= self.closedloop.duration {
            errs.push(("closedloop.t_step", "closedloop.t_step must fall inside closedloop.duration".into()));
        }
        errs
    }

    /// Canonical text form; [`parse_config`] reads it back unchanged.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let n = |x: f64| fmt_num(x);
        let ns = |xs: &[f64]| xs.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(", ");
        let p = &self.plant;
        kv("plant.f", n(p.f));
        kv("plant.i_ls_amp", n(p.i_ls_amp));
        kv("plant.c_dc", n(p.c_dc));
        kv("plant.l", n(p.l));
        kv("plant.c_o", n(p.c_o));
        kv("plant.r", n(p.r));
        kv("plant.d_nom", n(p.d_nom));
        kv("tf.signal", self.signal.to_string());
        kv("bode.f_lo", n(self.bode.f_lo));
        kv("bode.f_hi", n(self.bode.f_hi));
        kv("bode.points_per_decade", self.bode.points_per_decade.to_string());
        kv("sweep.axis", self.sweep.axis.to_string());
        kv("sweep.values", ns(&self.sweep.values));
        if let Some(dt) = self.sim.dt {
            kv("sim.dt", n(dt));
        }
        kv("sim.duration", n(self.sim.duration));
        kv(
            "sim.init",
            match self.sim.init {
                InitSpec::Steady => "steady".into(),
                InitSpec::State { v_dc, i_l, v_o } => ns(&[v_dc, i_l, v_o]),
            },
        );
        if let Some(d) = self.sim.duty {
            kv("sim.duty", n(d));
        }
        if let Some(d) = self.sim.step_duty {
            kv("sim.step_duty", n(d));
        }
        kv("sim.t_step", n(self.sim.t_step));
        kv("sim.source", self.sim.source.to_string());
        kv("sim.record_every", self.sim.record_every.to_string());
        kv("sim.preroll", n(self.sim.preroll));
        kv("probe.amp", n(self.probe.amp));
        kv("probe.freqs", ns(&self.probe.freqs));
        kv("probe.settle_periods", self.probe.settle_periods.to_string());
        kv("probe.measure_periods", self.probe.measure_periods.to_string());
        if let Some(dt) = self.probe.dt_max {
            kv("probe.dt", n(dt));
        }
        kv("control.kp", n(self.control.kp));
        kv("control.ki", n(self.control.ki));
        for (k, v) in [
            ("control.k_ivdc", self.control.k_ivdc),
            ("control.outer_kp", self.control.outer_kp),
            ("control.outer_ki", self.control.outer_ki),
            ("control.v_in", self.control.v_in),
        ] {
            if let Some(v) = v {
                kv(k, n(v));
            }
        }
        kv("margins.loop", self.margins.loop_kind.to_string());
        kv("margins.plant", self.margins.plant.to_string());
        kv("margins.f_lo", n(self.margins.f_lo));
        kv("margins.f_hi", n(self.margins.f_hi));
        let c = &self.closedloop;
        kv("closedloop.controller", c.controller.to_string());
        kv("closedloop.plant", c.plant.to_string());
        kv("closedloop.scenario", c.scenario.to_string());
        kv("closedloop.kp_before", n(c.kp_before));
        kv("closedloop.ref_step", n(c.ref_step));
        kv("closedloop.t_step", n(c.t_step));
        kv("closedloop.duration", n(c.duration));
        if let Some(dir) = &self.output_dir {
            kv("output.dir", dir.display().to_string());
        }
        s
    }
}

fn duty(v: &str) -> Result<f64, String> {
    let x = number(v)?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("duty ratio {x} outside the allowed range [0, 1]"))
    }
}

/// Parse configuration text; omitted keys keep their defaults.
pub fn parse_config(text: &str) -> Result<ToolConfig, CliError> {
    parse_with_overrides(text, &[])
}

/// Parse configuration text, then apply `key=value` overrides in order.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<ToolConfig, CliError> {
    let mut cfg = ToolConfig::default();
    let mut seen: HashMap<String, Location> = HashMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = Location::Line(k + 1);
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config(at, format!("expected 'key = value', got '{line}'")));
        };
        apply(&mut cfg, &mut seen, key, value, at)?;
    }
    for o in overrides {
        let at = Location::Override(o.clone());
        let Some((key, value)) = o.split_once('=') else {
            return Err(CliError::config(at, "expected key=value".into()));
        };
        apply(&mut cfg, &mut seen, key, value, at)?;
    }
    cfg.probe.d_nom = cfg.plant.d_nom;
    if let Some((key, msg)) = cfg.cross_check().into_iter().next() {
        let at = seen.get(key).cloned().unwrap_or(Location::Default(key));
        return Err(CliError::config(at, msg));
    }
    Ok(cfg)
}

fn apply(cfg: &mut ToolConfig, seen: &mut HashMap<String, Location>, key: &str, value: &str, at: Location) -> Result<(), CliError> {
    let key = canonical_key(key.trim());
    let value = value.trim();
    cfg.set(key, value).map_err(|msg| CliError::config(at.clone(), format!("{key}: {msg}")))?;
    seen.insert(key.to_string(), at);
    Ok(())
}

/// The parsed bundled configuration.
pub fn default_config() -> ToolConfig {
    parse_config(DEFAULT_CONFIG).expect("bundled configuration is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_is_the_default() {
        let cfg = default_config();
        assert_eq!(cfg, ToolConfig::default());
        let p = cfg.plant;
        assert_eq!((p.f, p.i_ls_amp, p.c_dc, p.l, p.c_o, p.r, p.d_nom), (200e3, 1.0, 30e-6, 77e-6, 40e-6, 7.0, 0.5));
    }

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config("# nothing\n\n").unwrap();
        assert_eq!(cfg.sim.dt, None);
        assert_eq!(cfg.sim.duration, 20e-3);
        assert_eq!(cfg, ToolConfig::default());
    }

    #[test]
    fn duty_rule_and_line_number() {
        let err = parse_config("r = 7\n\nd = 1.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("line 3:"), "{msg}");
        assert!(msg.contains("(0, 1)"), "{msg}");
    }

    #[test]
    fn unknown_and_malformed_lines() {
        let e = parse_config("plant.r = 7\nplant.q = 1\n").unwrap_err().to_string();
        assert!(e.starts_with("line 2:") && e.contains("unknown key 'plant.q'"), "{e}");
        let e = parse_config("plant.r 7\n").unwrap_err().to_string();
        assert!(e.starts_with("line 1:"), "{e}");
        let e = parse_config("plant.r = seven\n").unwrap_err().to_string();
        assert!(e.contains("not a number"), "{e}");
    }

    #[test]
    fn aliases_and_comments() {
        let cfg = parse_config("c_dc = 60e-6   # doubled\nplant.d = 0.4\n").unwrap();
        assert_eq!(cfg.plant.c_dc, 60e-6);
        assert_eq!(cfg.plant.d_nom, 0.4);
        assert_eq!(cfg.probe.d_nom, 0.4);
    }

    #[test]
    fn cross_key_errors_point_at_a_line() {
        let e = parse_config("plant.d_nom = 0.5\nprobe.amp = 0.3\n").unwrap_err().to_string();
        assert!(e.starts_with("line 2:"), "{e}");
        let e = parse_config("sim.dt = 1e-7\n").unwrap_err().to_string();
        assert!(e.starts_with("line 1:") && e.contains("T/200"), "{e}");
    }

    #[test]
    fn overrides_apply_last() {
        let cfg = parse_with_overrides("plant.r = 7\n", &["plant.r=9".into(), "tf.signal = i_l".into()]).unwrap();
        assert_eq!(cfg.plant.r, 9.0);
        assert_eq!(cfg.signal, Signal::IL);
        let e = parse_with_overrides("", &["d=2".into()]).unwrap_err().to_string();
        assert!(e.starts_with("override 'd=2'"), "{e}");
    }

    #[test]
    fn state_init_and_lists() {
        let cfg = parse_config("sim.init = 17, 1.2, 8.5\nsweep.axis = r\nsweep.values = 5, 7, 9\n").unwrap();
        assert_eq!(cfg.sim.init, InitSpec::State { v_dc: 17.0, i_l: 1.2, v_o: 8.5 });
        assert_eq!(cfg.sweep.axis, SweepAxis::R);
        assert_eq!(cfg.sweep.values, vec![5.0, 7.0, 9.0]);
        assert!(parse_config("sim.init = 1, 2\n").is_err());
        assert!(parse_config("sweep.axis = r\nsweep.values = 5, -1\n").is_err());
    }

    #[test]
    fn emit_round_trips_defaults() {
        let cfg = ToolConfig::default();
        assert_eq!(parse_config(&cfg.emit()).unwrap(), cfg);
    }
}
