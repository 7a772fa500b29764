//! Compensators, loop gains, stability margins and closed-loop simulation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{steady_state, ReceiverParams};
use crate::sim::{self, DutyController, DutyProgram, Init, InputSource, RunOptions, Scenario, SimTrace, SwitchedState};
use crate::tf::bode::{log_grid, nearest_branch, unwrapped_phase};
use crate::tf::{tf_vdc, tf_vo, voltage_source_buck_tf, Polynomial, RationalTF};

/// Duty limits of the closed-loop controllers.
pub const DUTY_MIN: f64 = 0.02;
pub const DUTY_MAX: f64 = 0.98;
/// Scan density of [`margins`].
pub const MARGIN_POINTS_PER_DECADE: usize = 200;
/// Relative output band a closed-loop run must stay inside over its final window.
pub const SETTLE_TOL: f64 = 0.02;
/// Fraction of the post-step interval used as the settling window.
pub const SETTLE_WINDOW_FRACTION: f64 = 0.2;

/// `G_c(s) = kp + ki/s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatorPI {
    pub kp: f64,
    pub ki: f64,
}

impl CompensatorPI {
    pub fn new(kp: f64, ki: f64) -> Result<Self> {
        let c = Self { kp, ki };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kp.is_finite() && self.kp > 0.0) {
            return Err(Error::InvalidController(format!("kp = {} must be positive", self.kp)));
        }
        if !(self.ki.is_finite() && self.ki >= 0.0) {
            return Err(Error::InvalidController(format!("ki = {} must be non-negative", self.ki)));
        }
        Ok(())
    }
}

/// `(kp·s + ki)/s`. The integrator is kept even when `ki = 0`.
pub fn pi_tf(c: &CompensatorPI) -> RationalTF {
    RationalTF::user(Polynomial::new(vec![c.ki, c.kp]), Polynomial::new(vec![0.0, 1.0]), "pi")
}

/// `±1`, the sign of the plant's low-frequency asymptote.
pub fn feedback_sign(plant: &RationalTF) -> f64 {
    match plant.low_frequency_asymptote() {
        Some((_, c)) if c < 0.0 => -1.0,
        _ => 1.0,
    }
}

/// Loop gain of a PI regulating the plant output.
///
/// The controller acts in the direction of the plant's low-frequency gain,
/// so a plant with negative DC gain (such as the WPT-fed `ṽ_o/d̃`) gets a
/// reverse-acting PI and the loop gain is `−G_c·G`.
pub fn single_loop_gain(plant: &RationalTF, c: &CompensatorPI) -> RationalTF {
    pi_tf(c).series(plant).scale(feedback_sign(plant))
}

/// `−k_ivdc·G_vDC(s)`.
pub fn inner_loop_gain(params: &ReceiverParams, k_ivdc: f64) -> Result<RationalTF> {
    Ok(tf_vdc(params)?.scale(-k_ivdc))
}

/// `1/|G_vDC(j·0.2πf)|`, placing the inner crossover at `f/10`.
pub fn design_k_ivdc(params: &ReceiverParams) -> Result<f64> {
    Ok(1.0 / tf_vdc(params)?.eval_hz(0.1 * params.f)?.norm())
}

/// Inner DC-link gain plus outer output-voltage PI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualLoopDesign {
    pub k_ivdc: f64,
    pub pi: CompensatorPI,
}

/// Outer loop gain `G_c·k·G_vo/(k·G_vDC − 1)`, built as
/// `(kp·s + ki)·k·N_vo / (s·(k·N_vDC − Den))`.
pub fn outer_loop_gain(params: &ReceiverParams, design: &DualLoopDesign) -> Result<RationalTF> {
    design.pi.validate()?;
    let (vdc, vo) = (tf_vdc(params)?, tf_vo(params)?);
    let k = design.k_ivdc;
    let num = &Polynomial::new(vec![design.pi.ki, design.pi.kp]) * &vo.num.scale(k);
    let inner = &vdc.num.scale(k) - &vdc.den;
    if inner.is_zero() {
        return Err(Error::InvalidController("k_ivdc·G_vDC − 1 vanishes identically".into()));
    }
    let den = &Polynomial::new(vec![0.0, 1.0]) * &inner;
    Ok(RationalTF::user(num, den, "outer-loop"))
}

/// Largest stable outer `kp`: `D·(C_o·R² + L)/(C_DC·R²)`.
pub fn kp_bound(params: &ReceiverParams) -> Result<f64> {
    params.validate()?;
    let ReceiverParams { c_dc, l, c_o, r, d_nom, .. } = *params;
    Ok(d_nom * (c_o * r * r + l) / (c_dc * r * r))
}

/// The default outer proportional gain.
pub const DEFAULT_KP: f64 = 0.5;
/// Fraction of the bound used when [`DEFAULT_KP`] would exceed it.
pub const KP_BOUND_FRACTION: f64 = 0.72;

/// `k_ivdc` from [`design_k_ivdc`], `kp = 0.5` (or `0.72·bound` when 0.5
/// is not below the bound) and `ki = 0.01πf·kp`.
pub fn design_dual_loop(params: &ReceiverParams) -> Result<DualLoopDesign> {
    let k_ivdc = design_k_ivdc(params)?;
    let bound = kp_bound(params)?;
    let kp = if DEFAULT_KP < bound { DEFAULT_KP } else { KP_BOUND_FRACTION * bound };
    Ok(DualLoopDesign {
        k_ivdc,
        pi: CompensatorPI::new(kp, 0.01 * PI * params.f * kp)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityMargins {
    /// First frequency where `|LG| = 1`.
    pub crossover_hz: Option<f64>,
    /// `180° +` unwrapped phase at the crossover.
    pub phase_margin_deg: Option<f64>,
    /// `−20·log10|LG|` where the unwrapped phase first reaches −180°;
    /// infinite when it never does.
    pub gain_margin_db: f64,
    pub phase_crossover_hz: Option<f64>,
}

/// Bisection for a sign change of `g` inside `[a, b]` (log-frequency).
fn bisect(mut a: f64, mut b: f64, g: impl Fn(f64) -> f64) -> f64 {
    let mut ga = g(a);
    for _ in 0..80 {
        let m = (a * b).sqrt();
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
        if b / a - 1.0 < 1e-13 {
            break;
        }
    }
    (a * b).sqrt()
}

/// Gain and phase margins of `lg` scanned over `[f_lo, f_hi]`.
///
/// Crossings are bracketed on a 200-point-per-decade log grid and refined
/// by bisection. The phase is unwrapped from the low-frequency asymptote.
pub fn margins(lg: &RationalTF, f_lo: f64, f_hi: f64) -> Result<StabilityMargins> {
    let freqs = log_grid(f_lo, f_hi, MARGIN_POINTS_PER_DECADE)?;
    let phase = unwrapped_phase(lg, &freqs)?;
    let mag = freqs
        .iter()
        .map(|&f| Ok(lg.eval_hz(f)?.norm().ln()))
        .collect::<Result<Vec<_>>>()?;
    let phase_at = |f: f64, near: f64| -> f64 {
        let raw = lg.eval_hz(f).map_or(f64::NAN, |v| v.arg().to_degrees());
        nearest_branch(raw, near)
    };

    let mut out = StabilityMargins {
        crossover_hz: None,
        phase_margin_deg: None,
        gain_margin_db: f64::INFINITY,
        phase_crossover_hz: None,
    };
    for k in 1..freqs.len() {
        if (mag[k - 1] > 0.0) != (mag[k] > 0.0) || mag[k] == 0.0 {
            let fc = bisect(freqs[k - 1], freqs[k], |f| lg.eval_hz(f).map_or(f64::NAN, |v| v.norm().ln()));
            let near = phase[k - 1] + (phase[k] - phase[k - 1]) * (fc / freqs[k - 1]).ln() / (freqs[k] / freqs[k - 1]).ln();
            out.crossover_hz = Some(fc);
            out.phase_margin_deg = Some(180.0 + phase_at(fc, near));
            break;
        }
    }
    for k in 1..freqs.len() {
        let (a, b) = (phase[k - 1] + 180.0, phase[k] + 180.0);
        if (a > 0.0) != (b > 0.0) || b == 0.0 {
            let g = |f: f64| {
                let t = (f / freqs[k - 1]).ln() / (freqs[k] / freqs[k - 1]).ln();
                phase_at(f, phase[k - 1] + t * (phase[k] - phase[k - 1])) + 180.0
            };
            let fp = bisect(freqs[k - 1], freqs[k], g);
            out.phase_crossover_hz = Some(fp);
            out.gain_margin_db = -20.0 * lg.eval_hz(fp)?.norm().log10();
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable { rhp_root_count: usize },
}

/// Closed-loop stability from the roots of `num(LG) + den(LG)`.
pub fn characteristic_stability(lg: &RationalTF) -> Result<Stability> {
    let roots = (&lg.num + &lg.den).roots()?;
    let n = roots.iter().filter(|r| r.re > 0.0).count();
    Ok(if n == 0 { Stability::Stable } else { Stability::Unstable { rhp_root_count: n } })
}

/// What feeds the buck in a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedLoopPlant {
    Wpt,
    VoltageSource { v_in: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerSpec {
    /// PI on `v_o` acting directly on duty.
    SinglePi(CompensatorPI),
    DualLoop(DualLoopDesign),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedLoopScenario {
    /// The proportional gain switches to `kp_after` at `t_step`.
    GainStep { kp_after: f64, t_step: f64, duration: f64 },
    /// The voltage reference moves by `fraction` of its nominal value at `t_step`.
    ReferenceStep { fraction: f64, t_step: f64, duration: f64 },
}

impl ClosedLoopScenario {
    pub fn duration(&self) -> f64 {
        match *self {
            ClosedLoopScenario::GainStep { duration, .. } | ClosedLoopScenario::ReferenceStep { duration, .. } => duration,
        }
    }

    pub fn t_step(&self) -> f64 {
        match *self {
            ClosedLoopScenario::GainStep { t_step, .. } | ClosedLoopScenario::ReferenceStep { t_step, .. } => t_step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct ClosedLoopResult {
    pub trace: SimTrace,
    pub verdict: Verdict,
    /// Output reference after the step.
    pub v_ref: f64,
    /// Largest `|v̄_o − v_ref|/v_ref` over the settling window.
    pub max_rel_dev: f64,
    /// `|mean(v̄_o) − v_ref|/v_ref` over the settling window.
    pub mean_rel_error: f64,
}

/// Per-period sampled controller with a trapezoidal integrator that holds
/// its state while the duty sits on a clamp.
struct Sampled {
    spec: ControllerSpec,
    scenario: ClosedLoopScenario,
    sign: f64,
    d_nom: f64,
    v_dc_nom: f64,
    v_ref0: f64,
    period: f64,
    integral: f64,
    prev_err: Option<f64>,
}

impl Sampled {
    fn v_ref(&self, t: f64) -> f64 {
        match self.scenario {
            ClosedLoopScenario::ReferenceStep { fraction, t_step, .. } if t >= t_step => self.v_ref0 * (1.0 + fraction),
            _ => self.v_ref0,
        }
    }

    fn pi(&self, t: f64) -> CompensatorPI {
        let pi = match self.spec {
            ControllerSpec::SinglePi(c) => c,
            ControllerSpec::DualLoop(d) => d.pi,
        };
        match self.scenario {
            ClosedLoopScenario::GainStep { kp_after, t_step, .. } if t >= t_step => CompensatorPI { kp: kp_after, ..pi },
            _ => pi,
        }
    }

    fn output(&self, s: &SwitchedState, u: f64) -> f64 {
        match self.spec {
            ControllerSpec::SinglePi(_) => self.d_nom + self.sign * u,
            ControllerSpec::DualLoop(d) => self.d_nom + d.k_ivdc * (s.v_dc - (self.v_dc_nom + u)),
        }
    }
}

impl DutyController for Sampled {
    fn duty(&mut self, _n: u64, t: f64, s: &SwitchedState) -> f64 {
        let e = self.v_ref(t) - s.v_o;
        let pi = self.pi(t);
        let candidate = self.integral + pi.ki * 0.5 * self.period * (e + self.prev_err.unwrap_or(e));
        let d = self.output(s, pi.kp * e + candidate);
        self.prev_err = Some(e);
        if (DUTY_MIN..=DUTY_MAX).contains(&d) {
            self.integral = candidate;
            d
        } else {
            d.clamp(DUTY_MIN, DUTY_MAX)
        }
    }
}

/// Closed-loop switched simulation from the nominal operating point.
///
/// The reference is the nominal `V_o`; the dual loop's DC-link reference
/// is the nominal `V_DC` plus the outer PI output. The run is `Diverged`
/// when the simulator stops on divergence or when any post-step cycle
/// average of `v_o` in the final fifth of the post-step interval leaves
/// the ±2% band around the reference.
pub fn closed_loop_sim(
    params: &ReceiverParams,
    plant: ClosedLoopPlant,
    controller: ControllerSpec,
    scenario: ClosedLoopScenario,
    opts: RunOptions,
) -> Result<ClosedLoopResult> {
    let op = steady_state(params)?;
    let (source, plant_tf) = match plant {
        ClosedLoopPlant::Wpt => (InputSource::Rectifier, tf_vo(params)?),
        ClosedLoopPlant::VoltageSource { v_in } => (
            InputSource::Voltage(v_in),
            voltage_source_buck_tf(v_in, params.l, params.c_o, params.r)?,
        ),
    };
    match controller {
        ControllerSpec::SinglePi(c) => c.validate()?,
        ControllerSpec::DualLoop(d) => {
            d.pi.validate()?;
            if !(d.k_ivdc.is_finite() && d.k_ivdc > 0.0) {
                return Err(Error::InvalidController(format!("k_ivdc = {} must be positive", d.k_ivdc)));
            }
            if matches!(plant, ClosedLoopPlant::VoltageSource { .. }) {
                return Err(Error::InvalidController(
                    "the dual loop needs a floating DC link; use a single PI with a voltage source".into(),
                ));
            }
        }
    }
    let (t_step, duration) = (scenario.t_step(), scenario.duration());
    if !(t_step.is_finite() && t_step >= 0.0 && t_step < duration) {
        return Err(Error::InvalidSim(format!("step time {t_step} must lie in [0, {duration})")));
    }
    match scenario {
        ClosedLoopScenario::GainStep { kp_after, .. } if !(kp_after.is_finite() && kp_after > 0.0) => {
            return Err(Error::InvalidController(format!("kp_after = {kp_after} must be positive")));
        }
        ClosedLoopScenario::ReferenceStep { fraction, .. } if !(fraction.is_finite() && fraction.abs() < 1.0) => {
            return Err(Error::InvalidSim(format!("reference step {fraction} must lie in (−1, 1)")));
        }
        _ => {}
    }
    let v_ref0 = match plant {
        ClosedLoopPlant::Wpt => op.v_o_ss,
        ClosedLoopPlant::VoltageSource { v_in } => params.d_nom * v_in,
    };
    let ctrl = Sampled {
        spec: controller,
        scenario,
        sign: feedback_sign(&plant_tf),
        d_nom: params.d_nom,
        v_dc_nom: op.v_dc_ss,
        v_ref0,
        period: params.period(),
        integral: 0.0,
        prev_err: None,
    };
    let v_ref = ctrl.v_ref(duration);
    let run = Scenario::new(duration, Init::Steady, DutyProgram::Controller(Box::new(ctrl))).with_source(source);
    let trace = sim::run_with(run, params, opts)?;

    let t_window = duration - SETTLE_WINDOW_FRACTION * (duration - t_step);
    let window = trace.cycle_avg.iter().filter(|c| c.t >= t_window);
    let (mut max_dev, mut sum, mut count) = (0.0f64, 0.0, 0usize);
    for c in window {
        max_dev = max_dev.max((c.v_o - v_ref).abs() / v_ref);
        sum += c.v_o;
        count += 1;
    }
    let mean_rel_error = if count > 0 { (sum / count as f64 - v_ref).abs() / v_ref } else { f64::INFINITY };
    let verdict = if trace.diverged() || count == 0 || !(max_dev <= SETTLE_TOL) {
        Verdict::Diverged
    } else {
        Verdict::Converged
    };
    Ok(ClosedLoopResult {
        trace,
        verdict,
        v_ref,
        max_rel_dev: if count > 0 { max_dev } else { f64::INFINITY },
        mean_rel_error,
    })
}
