//! Switched time-domain simulation of the rectifier-fed synchronous buck.
//!
//! The receiver current and the PWM signal are functions of time only, so
//! every discontinuity of the right-hand side happens at a known instant:
//! period starts `nT`, the turn-off edge `(n+d)T` and the rectifier
//! commutation `(n+½)T`. Each period is split at those instants and every
//! piece is integrated with fixed-step RK4, so no step ever straddles an
//! event.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{check_closed_duty, steady_state_at, ReceiverParams};

/// Length of the settling run that precedes a `Steady` start.
pub const DEFAULT_PREROLL: f64 = 2e-3;
/// Default step as a fraction of the switching period.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 500;
/// Coarsest step accepted, as a fraction of the switching period.
pub const MIN_STEPS_PER_PERIOD: usize = 200;
/// A state larger than this multiple of the operating-point scale stops the run.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// PWM logic level: 1 on `(nT, (n+d)T]`, 0 on `((n+d)T, (n+1)T]`.
pub fn pwm(t: f64, d: f64, period: f64) -> u8 {
    let n = (t / period).ceil() - 1.0;
    let local = t - n * period;
    u8::from(d > 0.0 && local <= d * period)
}

/// Rectified receiver current `|I_Ls·sin(2πft)|`.
pub fn rectified_current(t: f64, params: &ReceiverParams) -> f64 {
    (params.i_ls_amp * (2.0 * PI * params.f * t).sin()).abs()
}

/// Instantaneous plant state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SwitchedState {
    pub t: f64,
    pub v_dc: f64,
    pub i_l: f64,
    pub v_o: f64,
}

impl SwitchedState {
    pub fn new(t: f64, v_dc: f64, i_l: f64, v_o: f64) -> Self {
        Self { t, v_dc, i_l, v_o }
    }
}

/// `(v̇_dc, i̇_l, v̇_o)` of the rectifier-fed plant for switch level `u`.
///
/// With `u = 1` the DC link feeds the inductor; with `u = 0` the inductor
/// freewheels and the link is only charged by the rectifier.
pub fn state_derivatives(s: &SwitchedState, u: u8, params: &ReceiverParams) -> [f64; 3] {
    let u = f64::from(u.min(1));
    let i_r = rectified_current(s.t, params);
    rhs(i_r, u, s.v_dc, s.i_l, s.v_o, params, false)
}

#[inline(always)]
fn rhs(i_r: f64, u: f64, v_dc: f64, i_l: f64, v_o: f64, p: &ReceiverParams, stiff_link: bool) -> [f64; 3] {
    let dv_dc = if stiff_link { 0.0 } else { (i_r - u * i_l) / p.c_dc };
    [dv_dc, (u * v_dc - v_o) / p.l, (i_l - v_o / p.r) / p.c_o]
}

/// What feeds the buck input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputSource {
    /// Series-series receiver coil through the diode bridge into `C_DC`.
    Rectifier,
    /// Ideal DC voltage source; `v_dc` is pinned to this value.
    Voltage(f64),
    /// Rectifier disconnected (`i_r = 0`), the DC link only discharges.
    Open,
}

/// Initial condition of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Averaged operating point at the initial duty, then a settling
    /// pre-roll before the scenario clock starts.
    Steady,
    /// Explicit state at `t = 0` (the `t` field is ignored).
    State(SwitchedState),
}

/// Per-period duty computed from the state at the start of the period.
pub trait DutyController: Send {
    fn duty(&mut self, period_index: u64, t: f64, state: &SwitchedState) -> f64;
}

impl<F> DutyController for F
where
    F: FnMut(u64, f64, &SwitchedState) -> f64 + Send,
{
    fn duty(&mut self, period_index: u64, t: f64, state: &SwitchedState) -> f64 {
        self(period_index, t, state)
    }
}

/// How the duty ratio evolves. Duty is updated once per switching period.
pub enum DutyProgram {
    Constant(f64),
    /// `before` until the first period starting at or after `t_step`, then `after`.
    Step { before: f64, after: f64, t_step: f64 },
    /// `d + amp·sin(2π·f_p·t)`. Each period samples the sinusoid at its
    /// nominal turn-off instant `(n+d)T`, where the duty modulation acts,
    /// so the cycle-averaged switch function carries the sinusoid without
    /// added delay.
    Sinusoid { d: f64, amp: f64, f_p: f64 },
    /// Closed-loop control; the result is clamped to [0, 1].
    Controller(Box<dyn DutyController>),
}

impl fmt::Debug for DutyProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DutyProgram::Constant(d) => f.debug_tuple("Constant").field(d).finish(),
            DutyProgram::Step { before, after, t_step } => f
                .debug_struct("Step")
                .field("before", before)
                .field("after", after)
                .field("t_step", t_step)
                .finish(),
            DutyProgram::Sinusoid { d, amp, f_p } => f
                .debug_struct("Sinusoid")
                .field("d", d)
                .field("amp", amp)
                .field("f_p", f_p)
                .finish(),
            DutyProgram::Controller(_) => f.write_str("Controller(..)"),
        }
    }
}

impl DutyProgram {
    fn initial(&self, params: &ReceiverParams) -> f64 {
        match *self {
            DutyProgram::Constant(d) => d,
            DutyProgram::Step { before, .. } => before,
            DutyProgram::Sinusoid { d, .. } => d,
            DutyProgram::Controller(_) => params.d_nom,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DutyProgram::Constant(d) => check_closed_duty(d),
            DutyProgram::Step { before, after, t_step } => {
                check_closed_duty(before)?;
                check_closed_duty(after)?;
                if !t_step.is_finite() {
                    return Err(Error::InvalidSim("step time must be finite".into()));
                }
                Ok(())
            }
            DutyProgram::Sinusoid { d, amp, f_p } => {
                check_closed_duty(d - amp.abs())?;
                check_closed_duty(d + amp.abs())?;
                if !(f_p.is_finite() && f_p > 0.0) {
                    return Err(Error::InvalidSim(format!("perturbation frequency {f_p} must be positive")));
                }
                Ok(())
            }
            DutyProgram::Controller(_) => Ok(()),
        }
    }

    fn duty(&mut self, n: u64, t: f64, period: f64, state: &SwitchedState) -> f64 {
        let d = match self {
            DutyProgram::Constant(d) => *d,
            DutyProgram::Step { before, after, t_step } => {
                if t >= *t_step {
                    *after
                } else {
                    *before
                }
            }
            DutyProgram::Sinusoid { d, amp, f_p } => *d + *amp * (2.0 * PI * *f_p * (t + *d * period)).sin(),
            DutyProgram::Controller(c) => c.duty(n, t, state),
        };
        if d.is_nan() {
            0.0
        } else {
            d.clamp(0.0, 1.0)
        }
    }
}

/// A simulation experiment.
#[derive(Debug)]
pub struct Scenario {
    /// Length of the recorded run after any pre-roll (s).
    pub duration: f64,
    pub init: Init,
    pub duty: DutyProgram,
    pub source: InputSource,
}

impl Scenario {
    pub fn new(duration: f64, init: Init, duty: DutyProgram) -> Self {
        Self {
            duration,
            init,
            duty,
            source: InputSource::Rectifier,
        }
    }

    pub fn with_source(mut self, source: InputSource) -> Self {
        self.source = source;
        self
    }
}

/// Which integration samples are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recording {
    /// Every integrator step.
    Full,
    /// Every k-th step.
    Every(usize),
    /// Only per-period averages.
    CycleOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Largest integration step (s); `None` selects `T/500`.
    pub dt_max: Option<f64>,
    pub recording: Recording,
    /// Settling time before the scenario clock for `Init::Steady`, rounded
    /// up to whole periods.
    pub preroll: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            dt_max: None,
            recording: Recording::Full,
            preroll: DEFAULT_PREROLL,
        }
    }
}

/// One integrator sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub v_dc: f64,
    pub i_l: f64,
    pub v_o: f64,
    pub duty: f64,
    pub i_r: f64,
}

/// Time average over one switching period `[nT, (n+1)T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleAvg {
    pub n: u64,
    /// Period start (s).
    pub t: f64,
    pub v_dc: f64,
    pub i_l: f64,
    pub v_o: f64,
    /// Switch on-time divided by T.
    pub duty: f64,
}

/// Signal selector shared by trace analysis and the network analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Signal {
    VDc,
    IL,
    VO,
}

impl Signal {
    pub const ALL: [Signal; 3] = [Signal::VDc, Signal::IL, Signal::VO];

    pub fn name(self) -> &'static str {
        match self {
            Signal::VDc => "v_dc",
            Signal::IL => "i_l",
            Signal::VO => "v_o",
        }
    }

    pub fn of_sample(self, s: &Sample) -> f64 {
        match self {
            Signal::VDc => s.v_dc,
            Signal::IL => s.i_l,
            Signal::VO => s.v_o,
        }
    }

    pub fn of_cycle(self, c: &CycleAvg) -> f64 {
        match self {
            Signal::VDc => c.v_dc,
            Signal::IL => c.i_l,
            Signal::VO => c.v_o,
        }
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Signal {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "v_dc" | "vdc" => Ok(Signal::VDc),
            "i_l" | "il" => Ok(Signal::IL),
            "v_o" | "vo" => Ok(Signal::VO),
            other => Err(format!("unknown signal '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Completed,
    Diverged { t: f64, signal: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub samples: Vec<Sample>,
    pub cycle_avg: Vec<CycleAvg>,
    pub outcome: Outcome,
    /// Switching period T (s).
    pub period: f64,
    /// Smallest DC-link voltage seen during the recorded run.
    pub min_v_dc: f64,
}

impl SimTrace {
    pub fn diverged(&self) -> bool {
        matches!(self.outcome, Outcome::Diverged { .. })
    }

    /// Turn a divergence outcome into an error.
    pub fn completed(self) -> Result<Self> {
        match self.outcome {
            Outcome::Completed => Ok(self),
            Outcome::Diverged { t, signal, value } => Err(Error::Diverged { t, signal, value }),
        }
    }

    /// Cycle averages of the periods lying entirely inside `[t0, t1]`.
    pub fn cycles_in(&self, t0: f64, t1: f64) -> &[CycleAvg] {
        let eps = 1e-9 * self.period;
        let lo = self.cycle_avg.partition_point(|c| c.t < t0 - eps);
        let hi = self.cycle_avg.partition_point(|c| c.t + self.period <= t1 + eps);
        &self.cycle_avg[lo..hi.max(lo)]
    }
}

/// Run `scenario` with the default options and the given largest step.
pub fn run(scenario: Scenario, params: &ReceiverParams, dt_max: f64) -> Result<SimTrace> {
    run_with(
        scenario,
        params,
        RunOptions {
            dt_max: Some(dt_max),
            ..RunOptions::default()
        },
    )
}

struct Integrator<'a> {
    p: &'a ReceiverParams,
    period: f64,
    dt_max: f64,
    source: InputSource,
    limit: f64,
}

#[derive(Default)]
struct PeriodResult {
    sums: [f64; 3],
    on_time: f64,
    diverged: Option<(f64, &'static str, f64)>,
}

impl Integrator<'_> {
    /// Integrate one switching period starting at `t0` with duty `d`,
    /// calling `record(step_index_in_run, sample)` after each step.
    fn period(&self, t0: f64, d: f64, x: &mut [f64; 3], mut record: impl FnMut(Sample)) -> PeriodResult {
        let t_period = self.period;
        let mut edges = [0.0, d * t_period, 0.5 * t_period, t_period];
        edges.sort_by(f64::total_cmp);
        let stiff = matches!(self.source, InputSource::Voltage(_));
        let amp = match self.source {
            InputSource::Rectifier => self.p.i_ls_amp,
            _ => 0.0,
        };
        let w = 2.0 * PI / t_period;
        let i_r = |local: f64| (amp * (w * local).sin()).abs();

        let mut out = PeriodResult::default();
        for k in 0..3 {
            let (a, b) = (edges[k], edges[k + 1]);
            if b <= a {
                continue;
            }
            // u = 1 on (0, dT]
            let u = if b <= d * t_period { 1.0 } else { 0.0 };
            let m = ((b - a) / self.dt_max - 1e-9).ceil().max(1.0) as usize;
            let h = (b - a) / m as f64;
            if u == 1.0 {
                out.on_time += b - a;
            }
            for j in 0..m {
                let ts = a + j as f64 * h;
                let te = if j + 1 == m { b } else { a + (j + 1) as f64 * h };
                let h = te - ts;
                let prev = *x;
                let (ir0, ir1, ir2) = (i_r(ts), i_r(ts + 0.5 * h), i_r(te));
                let k1 = rhs(ir0, u, x[0], x[1], x[2], self.p, stiff);
                let k2 = rhs(ir1, u, x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1], x[2] + 0.5 * h * k1[2], self.p, stiff);
                let k3 = rhs(ir1, u, x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1], x[2] + 0.5 * h * k2[2], self.p, stiff);
                let k4 = rhs(ir2, u, x[0] + h * k3[0], x[1] + h * k3[1], x[2] + h * k3[2], self.p, stiff);
                for i in 0..3 {
                    x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                    out.sums[i] += 0.5 * h * (prev[i] + x[i]);
                }
                for (i, name) in ["v_dc", "i_l", "v_o"].into_iter().enumerate() {
                    if !(x[i].abs() <= self.limit) {
                        out.diverged = Some((t0 + te, name, x[i]));
                        return out;
                    }
                }
                record(Sample {
                    t: t0 + te,
                    v_dc: x[0],
                    i_l: x[1],
                    v_o: x[2],
                    duty: d,
                    i_r: i_r(te),
                });
            }
        }
        out
    }
}

/// Run a scenario with explicit options.
pub fn run_with(mut scenario: Scenario, params: &ReceiverParams, opts: RunOptions) -> Result<SimTrace> {
    params.validate()?;
    scenario.duty.validate()?;
    let period = params.period();
    if !(scenario.duration.is_finite() && scenario.duration > 0.0) {
        return Err(Error::InvalidSim(format!("duration {} must be positive", scenario.duration)));
    }
    let dt_max = opts.dt_max.unwrap_or(period / DEFAULT_STEPS_PER_PERIOD as f64);
    if !(dt_max > 0.0 && dt_max <= period / MIN_STEPS_PER_PERIOD as f64 * (1.0 + 1e-12)) {
        return Err(Error::InvalidSim(format!(
            "dt_max {dt_max} must lie in (0, T/{MIN_STEPS_PER_PERIOD}]"
        )));
    }
    if let InputSource::Voltage(v) = scenario.source {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidSim(format!("source voltage {v} must be positive")));
        }
    }
    let stride = match opts.recording {
        Recording::Full => Some(1),
        Recording::Every(k) if k > 0 => Some(k),
        Recording::Every(_) => return Err(Error::InvalidSim("recording stride must be positive".into())),
        Recording::CycleOnly => None,
    };

    let d0 = scenario.duty.initial(params);
    let nominal = steady_state_at(params, params.d_nom)?;
    let scale = match scenario.source {
        InputSource::Voltage(v) => v.max(v / params.r),
        _ => nominal.v_dc_ss.max(nominal.i_l_ss).max(nominal.v_o_ss),
    };
    let integ = Integrator {
        p: params,
        period,
        dt_max,
        source: scenario.source,
        limit: DIVERGENCE_FACTOR * scale,
    };

    let mut x = match scenario.init {
        Init::State(s) => [s.v_dc, s.i_l, s.v_o],
        Init::Steady => {
            let mut x = match scenario.source {
                InputSource::Voltage(v) => [v, d0 * v / params.r, d0 * v],
                _ => {
                    let op = steady_state_at(params, d0.max(f64::MIN_POSITIVE))?;
                    [op.v_dc_ss, op.i_l_ss, op.v_o_ss]
                }
            };
            let pre = (opts.preroll / period - 1e-9).ceil().max(0.0) as i64;
            for n in -pre..0 {
                let r = integ.period(n as f64 * period, d0, &mut x, |_| {});
                if let Some((t, signal, value)) = r.diverged {
                    return Err(Error::Diverged { t, signal, value });
                }
            }
            x
        }
    };
    if let InputSource::Voltage(v) = scenario.source {
        x[0] = v;
    }

    let n_periods = (scenario.duration / period - 1e-9).ceil() as u64;
    let mut trace = SimTrace {
        samples: Vec::new(),
        cycle_avg: Vec::with_capacity(n_periods as usize),
        outcome: Outcome::Completed,
        period,
        min_v_dc: x[0],
    };
    if let Some(k) = stride {
        let steps = (period / dt_max).ceil() as usize + 3;
        trace.samples.reserve(n_periods as usize * steps / k + 1);
    }

    let mut step_counter = 0usize;
    let mut min_v_dc = x[0];
    for n in 0..n_periods {
        let t0 = n as f64 * period;
        let state = SwitchedState::new(t0, x[0], x[1], x[2]);
        let d = scenario.duty.duty(n, t0, period, &state);
        if n == 0 && stride.is_some() {
            trace.samples.push(Sample {
                t: 0.0,
                v_dc: x[0],
                i_l: x[1],
                v_o: x[2],
                duty: d,
                i_r: match scenario.source {
                    InputSource::Rectifier => rectified_current(0.0, params),
                    _ => 0.0,
                },
            });
        }
        let samples = &mut trace.samples;
        let r = integ.period(t0, d, &mut x, |s| {
            min_v_dc = min_v_dc.min(s.v_dc);
            step_counter += 1;
            if let Some(k) = stride {
                if step_counter.is_multiple_of(k) {
                    samples.push(s);
                }
            }
        });
        if let Some((t, signal, value)) = r.diverged {
            trace.outcome = Outcome::Diverged { t, signal, value };
            break;
        }
        trace.cycle_avg.push(CycleAvg {
            n,
            t: t0,
            v_dc: r.sums[0] / period,
            i_l: r.sums[1] / period,
            v_o: r.sums[2] / period,
            duty: r.on_time / period,
        });
    }
    trace.min_v_dc = min_v_dc;
    Ok(trace)
}

/// Shape of a step response judged on cycle averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepShape {
    Monotonic,
    /// The signal first moved against its final direction of change.
    Undershoot { depth: f64, t_valley: f64 },
}

/// Fraction of the net change a wrong-way excursion must exceed to count.
pub const UNDERSHOOT_THRESHOLD: f64 = 0.01;

/// Detect an initial wrong-way response after a step at `t_step`.
///
/// The pre-step value is the average of the last period ending at or
/// before `t_step`, the final value the average of the last recorded
/// period. `depth` is the largest excursion against the direction of net
/// change, measured from the pre-step value.
pub fn detect_undershoot(trace: &SimTrace, signal: Signal, t_step: f64) -> Result<StepShape> {
    let cycles = &trace.cycle_avg;
    let (Some(first), Some(last)) = (cycles.first(), cycles.last()) else {
        return Err(Error::OutsideTrace {
            t: t_step,
            start: 0.0,
            end: 0.0,
        });
    };
    let end = last.t + trace.period;
    let eps = 1e-9 * trace.period;
    let split = cycles.partition_point(|c| c.t + trace.period <= t_step + eps);
    if split == 0 || split >= cycles.len() {
        return Err(Error::OutsideTrace {
            t: t_step,
            start: first.t,
            end,
        });
    }
    let initial = signal.of_cycle(&cycles[split - 1]);
    let final_value = signal.of_cycle(last);
    let direction = (final_value - initial).signum();
    let (valley_t, valley_excursion) = cycles[split..]
        .iter()
        .map(|c| (c.t, direction * (initial - signal.of_cycle(c))))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty after split");
    if valley_excursion > UNDERSHOOT_THRESHOLD * (final_value - initial).abs() {
        Ok(StepShape::Undershoot {
            depth: valley_excursion,
            t_valley: valley_t,
        })
    } else {
        Ok(StepShape::Monotonic)
    }
}
