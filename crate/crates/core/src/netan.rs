//! Virtual network analyzer.
//!
//! A sinusoid is superposed on the nominal duty of a switched simulation,
//! and the response of each state at the perturbation frequency is
//! extracted by correlation over an integer number of perturbation periods.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ReceiverParams;
use crate::sim::{self, DutyProgram, Init, Recording, RunOptions, Scenario, Signal, SimTrace};
use crate::tf::bode::{nearest_branch, unwrapped_phase, wrap_deg};
use crate::tf::{tf_il, tf_vdc, tf_vo, RationalTF};

/// Fewest samples per perturbation period accepted by the extractors.
pub const MIN_SAMPLES_PER_PERIOD: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub d_nom: f64,
    /// Perturbation amplitude |d̃|.
    pub amp: f64,
    /// Requested perturbation frequencies (Hz), strictly increasing.
    pub freqs: Vec<f64>,
    /// Perturbation periods discarded before measuring.
    pub settle_periods: u32,
    /// Perturbation periods analyzed.
    pub measure_periods: u32,
    /// Largest integration step; `None` uses the simulator default.
    pub dt_max: Option<f64>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            d_nom: 0.5,
            amp: 0.005,
            freqs: default_sweep_freqs(),
            settle_periods: 10,
            measure_periods: 8,
            dt_max: None,
        }
    }
}

/// 12 log-spaced points from 10 Hz to 10 kHz.
pub fn default_sweep_freqs() -> Vec<f64> {
    (0..12).map(|k| 10f64.powf(1.0 + 3.0 * k as f64 / 11.0)).collect()
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        crate::model::check_open_duty(self.d_nom)?;
        let room = self.d_nom.min(1.0 - self.d_nom);
        if !(self.amp > 0.0 && self.amp <= 0.5 * room) {
            return Err(Error::InvalidSim(format!(
                "perturbation amplitude {} must lie in (0, {}]",
                self.amp,
                0.5 * room
            )));
        }
        if self.measure_periods < 4 {
            return Err(Error::InvalidSim("measure_periods must be at least 4".into()));
        }
        if self.freqs.iter().any(|f| !(f.is_finite() && *f > 0.0)) || self.freqs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("probe frequencies must be positive and strictly increasing".into()));
        }
        Ok(())
    }
}

/// Measured gain and phase of one state at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePoint {
    pub freq: f64,
    pub signal: Signal,
    pub mag_db: f64,
    /// `arg(output tone) − arg(duty tone)`, wrapped into (−180, 180].
    pub phase_deg: f64,
}

/// Probe frequency moved onto an integer number of switching periods per
/// perturbation period.
pub fn snap_frequency(params: &ReceiverParams, f_p: f64) -> Result<f64> {
    if !(f_p.is_finite() && f_p > 0.0 && f_p <= params.f / 2.0) {
        return Err(Error::InvalidSim(format!(
            "probe frequency {f_p} Hz must lie in (0, f/2 = {} Hz]",
            params.f / 2.0
        )));
    }
    let ratio = (params.f / f_p).round().max(2.0);
    Ok(params.f / ratio)
}

fn check_window(f_p: f64, window: (f64, f64)) -> Result<usize> {
    let (t0, t1) = window;
    let periods = (t1 - t0) * f_p;
    let whole = periods.round();
    if !(t1 > t0) || whole < 1.0 || (periods - whole).abs() > 1e-6 * whole {
        return Err(Error::NonIntegerWindow {
            t0,
            t1,
            period: 1.0 / f_p,
        });
    }
    Ok(whole as usize)
}

fn tone(sin_sum: f64, cos_sum: f64) -> (f64, f64) {
    (sin_sum.hypot(cos_sum), cos_sum.atan2(sin_sum).to_degrees())
}

/// Amplitude and phase (degrees, sine reference) of the `f_p` component
/// of `signal` over `window`, from the integrator samples.
///
/// The window must span an integer number of perturbation periods and its
/// edges should coincide with samples. The least-squares sinusoid over
/// such a window is the trapezoidal correlation, which rejects DC and the
/// other harmonics of `f_p` by orthogonality.
pub fn extract_tone(trace: &SimTrace, f_p: f64, signal: Signal, window: (f64, f64)) -> Result<(f64, f64)> {
    let periods = check_window(f_p, window)?;
    let (t0, t1) = window;
    let eps = 1e-9 * (t1 - t0);
    let (Some(first), Some(last)) = (trace.samples.first(), trace.samples.last()) else {
        return Err(Error::OutsideTrace { t: t0, start: 0.0, end: 0.0 });
    };
    if t0 < first.t - eps || t1 > last.t + eps {
        return Err(Error::OutsideTrace {
            t: if t0 < first.t { t0 } else { t1 },
            start: first.t,
            end: last.t,
        });
    }
    let lo = trace.samples.partition_point(|s| s.t < t0 - eps);
    let hi = trace.samples.partition_point(|s| s.t <= t1 + eps);
    let span = &trace.samples[lo..hi];
    if span.len() < MIN_SAMPLES_PER_PERIOD * periods + 1 {
        return Err(Error::TooFewSamples {
            got: span.len().saturating_sub(1) / periods,
            need: MIN_SAMPLES_PER_PERIOD,
        });
    }
    let w = 2.0 * PI * f_p;
    let (mut s_acc, mut c_acc) = (0.0, 0.0);
    for pair in span.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let h = b.t - a.t;
        let (xa, xb) = (signal.of_sample(a), signal.of_sample(b));
        s_acc += 0.5 * h * (xa * (w * a.t).sin() + xb * (w * b.t).sin());
        c_acc += 0.5 * h * (xa * (w * a.t).cos() + xb * (w * b.t).cos());
    }
    let scale = 2.0 / (t1 - t0);
    Ok(tone(s_acc * scale, c_acc * scale))
}

/// As [`extract_tone`], but from the per-period averages.
///
/// Each average is placed at its period midpoint and the amplitude is
/// divided by the averaging filter gain `sin(πf_pT)/(πf_pT)`. The window
/// must also hold an integer number of switching periods.
pub fn extract_tone_cycles(trace: &SimTrace, f_p: f64, signal: Signal, window: (f64, f64)) -> Result<(f64, f64)> {
    let periods = check_window(f_p, window)?;
    let t_sw = trace.period;
    let n_sw = (window.1 - window.0) / t_sw;
    if (n_sw - n_sw.round()).abs() > 1e-6 * n_sw {
        return Err(Error::NonIntegerWindow {
            t0: window.0,
            t1: window.1,
            period: t_sw,
        });
    }
    let cycles = trace.cycles_in(window.0, window.1);
    if cycles.len() != n_sw.round() as usize {
        let end = trace.cycle_avg.last().map_or(0.0, |c| c.t + t_sw);
        return Err(Error::OutsideTrace {
            t: window.1,
            start: trace.cycle_avg.first().map_or(0.0, |c| c.t),
            end,
        });
    }
    if cycles.len() < MIN_SAMPLES_PER_PERIOD * periods {
        return Err(Error::TooFewSamples {
            got: cycles.len() / periods,
            need: MIN_SAMPLES_PER_PERIOD,
        });
    }
    let w = 2.0 * PI * f_p;
    let (mut s_acc, mut c_acc) = (0.0, 0.0);
    for c in cycles {
        let t = c.t + 0.5 * t_sw;
        let x = signal.of_cycle(c);
        s_acc += x * (w * t).sin();
        c_acc += x * (w * t).cos();
    }
    let scale = 2.0 / cycles.len() as f64;
    let arg = PI * f_p * t_sw;
    let sinc = arg.sin() / arg;
    let (amp, phase) = tone(s_acc * scale, c_acc * scale);
    Ok((amp / sinc, phase))
}

/// Perturb at `f_p` (snapped, see [`snap_frequency`]) and measure all three
/// states. Results are ordered `v_dc`, `i_l`, `v_o`.
pub fn probe_point(params: &ReceiverParams, cfg: &ProbeConfig, f_p: f64) -> Result<[ProbePoint; 3]> {
    cfg.validate()?;
    let plant = params.with_duty(cfg.d_nom)?;
    let f = snap_frequency(&plant, f_p)?;
    let t_settle = cfg.settle_periods as f64 / f;
    let t_end = (cfg.settle_periods + cfg.measure_periods) as f64 / f;
    let scenario = Scenario::new(
        t_end,
        Init::Steady,
        DutyProgram::Sinusoid {
            d: cfg.d_nom,
            amp: cfg.amp,
            f_p: f,
        },
    );
    let trace = sim::run_with(
        scenario,
        &plant,
        RunOptions {
            dt_max: cfg.dt_max,
            recording: Recording::CycleOnly,
            ..RunOptions::default()
        },
    )?
    .completed()?;
    let measure = |signal: Signal| -> Result<ProbePoint> {
        let (amp, phase) = extract_tone_cycles(&trace, f, signal, (t_settle, t_end))?;
        Ok(ProbePoint {
            freq: f,
            signal,
            mag_db: 20.0 * (amp / cfg.amp).log10(),
            phase_deg: wrap_deg(phase),
        })
    };
    Ok([measure(Signal::VDc)?, measure(Signal::IL)?, measure(Signal::VO)?])
}

/// The analytic transfer function corresponding to a probed signal.
pub fn analytic_tf(params: &ReceiverParams, signal: Signal) -> Result<RationalTF> {
    match signal {
        Signal::VDc => tf_vdc(params),
        Signal::IL => tf_il(params),
        Signal::VO => tf_vo(params),
    }
}

/// A measured point next to its analytic value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeComparison {
    pub measured: ProbePoint,
    pub analytic_mag_db: f64,
    /// Analytic phase wrapped into (−180, 180].
    pub analytic_phase_deg: f64,
    pub err_db: f64,
    /// Wrapped phase difference, measured − analytic.
    pub err_deg: f64,
    /// Measured phase unwrapped along the sweep, on the analytic branch.
    pub unwrapped_phase_deg: f64,
    /// Analytic phase on the Bode unwrapping convention.
    pub analytic_unwrapped_deg: f64,
}

/// One frequency of a sweep; a failing simulation is kept as its error.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub requested_freq: f64,
    pub result: std::result::Result<[ProbeComparison; 3], Error>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
}

impl SweepReport {
    pub fn comparisons(&self) -> impl Iterator<Item = &ProbeComparison> {
        self.entries.iter().filter_map(|e| e.result.as_ref().ok()).flatten()
    }

    pub fn max_abs_err_db(&self) -> f64 {
        self.comparisons().map(|c| c.err_db.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_err_deg(&self) -> f64 {
        self.comparisons().map(|c| c.err_deg.abs()).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepEntry> {
        self.entries.iter().filter(|e| e.result.is_err())
    }
}

/// Probe every configured frequency and compare with the analytic plant.
///
/// Points run concurrently and are assembled in frequency order. A
/// diverging point is recorded in its entry and the sweep continues.
pub fn frequency_sweep(params: &ReceiverParams, cfg: &ProbeConfig) -> Result<SweepReport> {
    cfg.validate()?;
    if cfg.freqs.is_empty() {
        return Ok(SweepReport::default());
    }
    let plant = params.with_duty(cfg.d_nom)?;
    let snapped = cfg
        .freqs
        .iter()
        .map(|&f| snap_frequency(&plant, f))
        .collect::<Result<Vec<_>>>()?;
    if snapped.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid(
            "two probe frequencies snap to the same switching-period multiple".into(),
        ));
    }
    let tfs = Signal::ALL.map(|s| analytic_tf(&plant, s));
    let tfs = [tfs[0].clone()?, tfs[1].clone()?, tfs[2].clone()?];
    let analytic_phase = tfs
        .iter()
        .map(|tf| unwrapped_phase(tf, &snapped))
        .collect::<Result<Vec<_>>>()?;

    let measured: Vec<Result<[ProbePoint; 3]>> = cfg.freqs.par_iter().map(|&f| probe_point(&plant, cfg, f)).collect();

    let mut previous: [Option<f64>; 3] = [None; 3];
    let mut entries = Vec::with_capacity(measured.len());
    for (k, result) in measured.into_iter().enumerate() {
        let result = result.and_then(|points| {
            let mut out = Vec::with_capacity(3);
            for (i, m) in points.iter().enumerate() {
                let g = tfs[i].eval_hz(m.freq)?;
                let analytic_mag_db = 20.0 * g.norm().log10();
                let analytic_phase_deg = wrap_deg(g.arg().to_degrees());
                let reference = previous[i].unwrap_or(analytic_phase[i][k]);
                let unwrapped = nearest_branch(m.phase_deg, reference);
                previous[i] = Some(unwrapped);
                out.push(ProbeComparison {
                    measured: *m,
                    analytic_mag_db,
                    analytic_phase_deg,
                    err_db: m.mag_db - analytic_mag_db,
                    err_deg: wrap_deg(m.phase_deg - analytic_phase_deg),
                    unwrapped_phase_deg: unwrapped,
                    analytic_unwrapped_deg: analytic_phase[i][k],
                });
            }
            Ok([out[0], out[1], out[2]])
        });
        entries.push(SweepEntry {
            requested_freq: cfg.freqs[k],
            result,
        });
    }
    Ok(SweepReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{CycleAvg, Outcome, Sample};

    fn synthetic(f: impl Fn(f64) -> f64, t_end: f64, n: usize) -> SimTrace {
        let samples = (0..=n)
            .map(|k| {
                let t = t_end * k as f64 / n as f64;
                let v = f(t);
                Sample {
                    t,
                    v_dc: v,
                    i_l: 2.0 * v,
                    v_o: -v,
                    duty: 0.5,
                    i_r: 0.0,
                }
            })
            .collect();
        SimTrace {
            samples,
            cycle_avg: Vec::new(),
            outcome: Outcome::Completed,
            period: 5e-6,
            min_v_dc: 0.0,
        }
    }

    #[test]
    fn exact_sinusoid() {
        let fp = 2000.0;
        let tr = synthetic(|t| 3.0 + 0.5 * (2.0 * PI * fp * t + 30f64.to_radians()).sin(), 4e-3, 4000);
        let (a, ph) = extract_tone(&tr, fp, Signal::VDc, (0.5e-3, 3.5e-3)).unwrap();
        assert!((a - 0.5).abs() < 1e-9, "{a}");
        assert!((ph - 30.0).abs() < 1e-9, "{ph}");
        let (a, ph) = extract_tone(&tr, fp, Signal::VO, (0.5e-3, 3.5e-3)).unwrap();
        assert!((a - 0.5).abs() < 1e-9 && (wrap_deg(ph) - wrap_deg(210.0)).abs() < 1e-9);
    }

    #[test]
    fn second_tone_rejected() {
        let fp = 500.0;
        let tr = synthetic(
            |t| 0.25 * (2.0 * PI * fp * t - 1.0).sin() + 0.7 * (2.0 * PI * 2.0 * fp * t + 0.3).cos() + 4.0,
            8e-3,
            8000,
        );
        let (a, ph) = extract_tone(&tr, fp, Signal::VDc, (0.0, 6e-3)).unwrap();
        assert!((a - 0.25).abs() < 1e-9);
        assert!((ph - (-1f64).to_degrees()).abs() < 1e-9);
    }

    #[test]
    fn window_and_density_checks() {
        let tr = synthetic(|t| t, 1e-2, 1000);
        assert!(matches!(
            extract_tone(&tr, 1000.0, Signal::VDc, (0.0, 1.5e-3)),
            Err(Error::NonIntegerWindow { .. })
        ));
        assert!(matches!(
            extract_tone(&tr, 10e3, Signal::VDc, (0.0, 2e-3)),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(
            extract_tone(&tr, 100.0, Signal::VDc, (0.0, 2e-2)),
            Err(Error::OutsideTrace { .. })
        ));
    }

    #[test]
    fn cycle_extractor_undoes_averaging() {
        // Exact period averages of a pure tone.
        let (fp, t_sw, a, phi) = (5000.0, 5e-6, 0.3, 0.4);
        let w = 2.0 * PI * fp;
        let cycle_avg = (0..800u64)
            .map(|n| {
                let t = n as f64 * t_sw;
                let avg = a * ((w * t + phi).cos() - (w * (t + t_sw) + phi).cos()) / (w * t_sw) + 1.0;
                CycleAvg {
                    n,
                    t,
                    v_dc: avg,
                    i_l: avg,
                    v_o: avg,
                    duty: 0.5,
                }
            })
            .collect();
        let tr = SimTrace {
            samples: Vec::new(),
            cycle_avg,
            outcome: Outcome::Completed,
            period: t_sw,
            min_v_dc: 0.0,
        };
        let (amp, ph) = extract_tone_cycles(&tr, fp, Signal::IL, (1e-3, 4e-3)).unwrap();
        assert!((amp - a).abs() < 1e-9, "{amp}");
        assert!((ph - phi.to_degrees()).abs() < 1e-7, "{ph}");
    }

    #[test]
    fn snapping() {
        let p = ReceiverParams::prototype();
        assert_eq!(snap_frequency(&p, 2000.0).unwrap(), 2000.0);
        assert_eq!(snap_frequency(&p, 10e3).unwrap(), 10e3);
        let s = snap_frequency(&p, 3000.0).unwrap();
        assert_eq!(p.f / s, (p.f / s).round());
        assert!(snap_frequency(&p, 150e3).is_err());
    }

    #[test]
    fn empty_sweep() {
        let cfg = ProbeConfig {
            freqs: vec![],
            ..ProbeConfig::default()
        };
        assert!(frequency_sweep(&ReceiverParams::prototype(), &cfg).unwrap().entries.is_empty());
    }

    #[test]
    fn config_checks() {
        let bad_amp = ProbeConfig {
            amp: 0.3,
            ..ProbeConfig::default()
        };
        assert!(bad_amp.validate().is_err());
        let few = ProbeConfig {
            measure_periods: 3,
            ..ProbeConfig::default()
        };
        assert!(few.validate().is_err());
        assert_eq!(default_sweep_freqs().len(), 12);
    }
}
