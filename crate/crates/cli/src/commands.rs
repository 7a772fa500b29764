//! One function per subcommand. Each writes its files into the output
//! directory and returns a one-line summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use wptrx_core::control::{
    closed_loop_sim, design_dual_loop, inner_loop_gain, kp_bound, margins as loop_margins, outer_loop_gain,
    single_loop_gain, ClosedLoopPlant, ClosedLoopScenario, CompensatorPI, ControllerSpec, DualLoopDesign,
    StabilityMargins, Verdict,
};
use wptrx_core::model::steady_state;
use wptrx_core::netan::{analytic_tf, frequency_sweep};
use wptrx_core::sim::{self, DutyProgram, Init, InputSource, Recording, RunOptions, Scenario, SimTrace, SwitchedState};
use wptrx_core::tf::{bode, parameter_sweep, pole_zero_map, tf_il, tf_vdc, tf_vo, voltage_source_buck_tf, RationalTF};

use crate::config::{ControllerKind, InitSpec, LoopKind, PlantKind, ScenarioKind, SourceSpec, ToolConfig};
use crate::error::CliError;
use crate::fmt_num as n;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Operating point of the averaged model.
    Steady,
    /// Transfer-function coefficients of all three signals.
    Tf,
    /// Poles and zeros of the selected signal.
    Pzmap,
    /// Analytic Bode data of the selected signal.
    Bode,
    /// Output-voltage poles, zeros and DC gain across a parameter sweep.
    Sweep,
    /// Switched time-domain simulation.
    Sim,
    /// Virtual network analyzer sweep against the analytic plant.
    Probe,
    /// Dual-loop compensator design.
    Design,
    /// Stability margins of the selected loop gain.
    Margins,
    /// Closed-loop switched simulation.
    Closedloop,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Tf => "tf",
            Command::Pzmap => "pzmap",
            Command::Bode => "bode",
            Command::Sweep => "sweep",
            Command::Sim => "sim",
            Command::Probe => "probe",
            Command::Design => "design",
            Command::Margins => "margins",
            Command::Closedloop => "closedloop",
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

struct Ctx<'a> {
    cmd: &'static str,
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Ctx<'_> {
    fn core<T>(&self, r: wptrx_core::Result<T>) -> Result<T, CliError> {
        r.map_err(|source| CliError::Command { command: self.cmd, source })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        fs::create_dir_all(self.dir).map_err(|source| CliError::Io {
            path: self.dir.to_path_buf(),
            source,
        })?;
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|source| CliError::Io { path: path.clone(), source })?;
        self.files.push(path);
        Ok(())
    }
}

/// Run `command` with `cfg`, writing into `out_dir`.
pub fn dispatch(command: Command, cfg: &ToolConfig, out_dir: &Path) -> Result<Report, CliError> {
    let mut ctx = Ctx {
        cmd: command.name(),
        dir: out_dir,
        files: Vec::new(),
    };
    let summary = match command {
        Command::Steady => steady(&mut ctx, cfg),
        Command::Tf => tf(&mut ctx, cfg),
        Command::Pzmap => pzmap(&mut ctx, cfg),
        Command::Bode => bode_cmd(&mut ctx, cfg),
        Command::Sweep => sweep(&mut ctx, cfg),
        Command::Sim => sim_cmd(&mut ctx, cfg),
        Command::Probe => probe(&mut ctx, cfg),
        Command::Design => design(&mut ctx, cfg),
        Command::Margins => margins(&mut ctx, cfg),
        Command::Closedloop => closedloop(&mut ctx, cfg),
    }?;
    Ok(Report {
        summary,
        files: ctx.files,
    })
}

fn key_values(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

fn steady(ctx: &mut Ctx, cfg: &ToolConfig) -> Result<String, CliError> {
    let op = ctx.core(steady_state(&cfg.plant))?;
    ctx.write(
        "steady.txt",
        &key_values(&[
            ("d", n(op.d)),
            ("v_dc_v", n(op.v_dc_ss)),
            ("i_l_a", n(op.i_l_ss)),
            ("v_o_v", n(op.v_o_ss)),
        ]),
    )?;
    Ok(format!(
        "steady: V_DC = {:.6} V, I_L = {:.6} A, V_o = {:.6} V at D = {}",
        op.v_dc_ss, op.i_l_ss, op.v_o_ss, op.d
    ))
}

fn selected_tf(ctx: &Ctx, cfg: &ToolConfig) -> Result<RationalTF, CliError> {
    ctx.core(analytic_tf(&cfg.plant, cfg.signal))
}

fn tf(ctx: &mut Ctx, cfg: &ToolConfig) -> Result<String, CliError> {
    let tfs = [
        ("v_dc", ctx.core(tf_vdc(&cfg.plant))?),
        ("i_l", ctx.core(tf_il(&cfg.plant))?),
        ("v_o", ctx.core(tf_vo(&cfg.plant))?),
    ];
    let mut out = String::from("# coefficients in ascending powers of s\n");
    for (name, tf) in &tfs {
        let join = |c: &[f64]| c.iter().map(|&x| n(x)).collect::<Vec<_>>().join(",");
        let _ = writeln!(out, "{name}.num={}", join(tf.num.coeffs()));
        let _ = writeln!(out, "{name}.den={}", join(tf.den.coeffs()));
        let _ = writeln!(out, "{name}.dc_gain={}", n(tf.dc_gain().unwrap_or(f64::NAN)));
    }
    ctx.write("tf.txt", &out)?;
    Ok(format!(
        "tf: DC gains v_dc {:.4}, i_l {:.4}, v_o {:.4} per unit duty",
        tfs[0].1.dc_gain().unwrap_or(f64::NAN),
        tfs[1].1.dc_gain().unwrap_or(f64::NAN),
        tfs[2].1.dc_gain().unwrap_or(f64::NAN)
    ))
}

fn pzmap(ctx: &mut Ctx, cfg: &ToolConfig) -> Result<String, CliError> {
    let tf = selected_tf(ctx, cfg)?;
    let pz = ctx.core(pole_zero_map(&tf))?;
    let mut out = format!("# transfer function: {} ({}/duty)\n", tf.label, cfg.signal);
    out.push_str("kind,re_rad_per_s,im_rad_per_s\n");
    for (kind, roots) in [("pole", &pz.poles), ("zero", &pz.zeros)] {
        for z in roots {
            let _ = writeln!(out, "{kind},{},{}", n(z.re), n(z.im));
        }
    }
    ctx.write("pz.csv", &out)?;
    Ok(format!(
        "pzmap: {} poles, {} zeros ({} in the right half plane) for {}",
        pz.poles.len(),
        pz.zeros.len(),
        pz.rhp_zeros().count(),
        cfg.signal
    ))
}

fn bode_cmd(ctx: &mut Ctx, cfg: &ToolConfig) -> Result<String, CliError> {
    let tf = selected_tf(ctx, cfg)?;
    let resp = ctx.core(bode(&tf, cfg.bode.f_lo, cfg.bode.f_hi, cfg.bode.points_per_decade))?;
    let mut out = String::from("freq_hz,mag_db,phase_deg\n");
    for p in &resp.points {
        let _ = writeln!(out, "{},{},{}", n(p.freq_hz), n(p.mag_db), n(p.phase_deg));
    }
    ctx.write("bode.csv", &out)?;
    Ok(format!("bode: {} points for {} from {} Hz to {} Hz", resp.points.len(), cfg.signal, cfg.bode.f_lo, cfg.bode.f_hi))
}

fn sweep(ctx: &mut Ctx, cfg: &ToolConfig) -> Result<String, CliError> {
    let pts = ctx.core(parameter_sweep(&cfg.plant, cfg.sweep.axis, &cfg.sweep.values))?;
    let mut summary = format!("# axis={}\nvalue,dc_gain_db,rhp_zero_rad_per_s\n", cfg.sweep.axis);
    let mut roots = format!("# axis={}\nvalue,kind,re_rad_per_s,im_rad_per_s\n", cfg.sweep.axis);
    for p in &pts {
        let rhp = p.pz.rhp_zeros().map(|z| z.re).fold(f64::NAN, f64::max);
        let _ = writeln!(summary, "{},{},{}", n(p.value), n(p.dc_gain_db), n(rhp));
        for (kind, list) in [("pole", &p.pz.poles), ("zero", &p.pz.zeros)] {
            for z in list {
                let _ = writeln!(roots, "{},{kind},{},{}", n(p.value), n(z.re), n(z.im));
            }
        }
    }
    ctx.write("sweep.csv", &summary)?;
    ctx.write("sweep_pz.csv", &roots)?;
    Ok(format!("sweep: {} values of {}", pts.len(), cfg.sweep.axis))
}

fn v_in(ctx: &Ctx, cfg: &ToolConfig) -> Result<f64, CliError> {
    match cfg.control.v_in {
        Some(v) => Ok(v),
        None => Ok(ctx.core(steady_state(&cfg.plant))?.v_dc_ss),
    }
}

fn write_cycles(ctx: &mut Ctx, trace: &SimTrace) -> Result<(), CliError> {
    let mut out = String::from("n,t_s,v_dc_avg_v,i_l_avg_a,v_o_avg_v,duty_avg\n");
    for c in &trace.cycle_avg {
        let _ = writeln!(out, "{},{},{},{},{},{}", c.n, n(c.t), n(c.v_dc), n(c.i_l), n(c.v_o), n(c.duty));
    }
    ctx.write("cycle_avg.csv", &out)
}

fn outcome_text(trace: &SimTrace) -> String {
    match trace.outcome {
        sim::Outcome::Completed => "completed".into(),
        sim::Outcome::Diverged { t, signal, value } => format!("diverged at t = {t} s ({signal} = {value})"),
    }
}

fn sim_cmd(ctx: &mut Ctx, cfg: &ToolConfig) -> Result<String, CliError> {
    let s = &cfg.sim;
    let d = s.duty.unwrap_or(cfg.plant.d_nom);
    let duty = match s.step_duty {
        Some(after) => DutyProgram::Step {
            before: d,
            after,
            t_step: s.t_step,
        },
        None => DutyProgram::Constant(d),
    };
    let init = match s.init {
        InitSpec::Steady => Init::Steady,
        InitSpec::State { v_dc, i_l, v_o } => Init::State(SwitchedState::new(0.0, v_dc, i_l, v_o)),
    };
    let source = match s.source {
        SourceSpec::Rectifier => InputSource::Rectifier,
        SourceSpec::Open => InputSource::Open,
        SourceSpec::Voltage => InputSource::Voltage(v_in(ctx, cfg)?),
    };
    let opts = RunOptions {
        dt_max: s.dt,
        recording: Recording::Every(s.record_every),
        preroll: s.preroll,
    };
    let trace = ctx.core(sim::run_with(
        Scenario::new(s.duration, init, duty).with_source(source),
        &cfg.plant,
        opts,
    ))?;
    let mut out = String::from("t_s,v_dc_v,i_l_a,v_o_v,duty,i_r_a\n");
    for x in &trace.samples {
        let _ = writeln!(out, "{},{},{},{},{},{}", n(x.t), n(x.v_dc), n(x.i_l), n(x.v_o), n(x.duty), n(x.i_r));
    }
    ctx.write("trace.csv", &out)?;
    write_cycles(ctx, &trace)?;
    let last = trace.cycle_avg.last();
    Ok(format!(
        "sim: {}, {} periods; final cycle averages v_dc {:.4} V, i_l {:.4} A, v_o {:.4} V",
        outcome_text(&trace),
        trace.cycle_avg.len(),
        last.map_or(f64::NAN, |c| c.v_dc),
        last.map_or(f64::NAN, |c| c.i_l),
        last.map_or(f64::NAN, |c| c.v_o)
    ))
}

fn probe(ctx: &mut Ctx, cfg: &ToolConfig) -> Result<String, CliError> {
    let report = ctx.core(frequency_sweep(&cfg.plant, &cfg.probe))?;
    let mut out = String::from("freq_hz,signal,mag_db,phase_deg,analytic_mag_db,analytic_phase_deg,err_db,err_deg\n");
    for e in &report.entries {
        match &e.result {
            Ok(points) => {
                for c in points {
                    let m = &c.measured;
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        n(m.freq),
                        m.signal,
                        n(m.mag_db),
                        n(m.phase_deg),
                        n(c.analytic_mag_db),
                        n(c.analytic_phase_deg),
                        n(c.err_db),
                        n(c.err_deg)
                    );
                }
            }
            Err(err) => {
                let _ = writeln!(out, "# {} Hz failed: {err}", n(e.requested_freq));
            }
        }
    }
    ctx.write("probe.csv", &out)?;
    let failed = report.failures().count();
    Ok(format!(
        "probe: {} frequencies ({} failed), max error {:.3} dB / {:.2} deg",
        report.entries.len(),
        failed,
        report.max_abs_err_db(),
        report.max_abs_err_deg()
    ))
}

/// The designed dual loop with any configured overrides applied.
pub fn resolved_design(cfg: &ToolConfig) -> wptrx_core::Result<DualLoopDesign> {
    let mut d = design_dual_loop(&cfg.plant)?;
    if let Some(k) = cfg.control.k_ivdc {
        d.k_ivdc = k;
    }
    if let Some(kp) = cfg.control.outer_kp {
        d.pi.kp = kp;
        d.pi.ki = 0.01 * std::f64::consts::PI * cfg.plant.f * kp;
    }
    if let Some(ki) = cfg.control.outer_ki {
        d.pi.ki = ki;
    }
    d.pi.validate()?;
    Ok(d)
}

fn design(ctx: &mut Ctx, cfg: &ToolConfig) -> Result<String, CliError> {
    let d = ctx.core(resolved_design(cfg))?;
    let bound = ctx.core(kp_bound(&cfg.plant))?;
    ctx.write(
        "design.txt",
        &key_values(&[
            ("k_ivdc", n(d.k_ivdc)),
            ("kp", n(d.pi.kp)),
            ("ki", n(d.pi.ki)),
            ("kp_bound", n(bound)),
        ]),
    )?;
    Ok(format!(
        "design: k_ivdc = {:.4}, kp = {}, ki = {:.1}, kp bound {:.4}",
        d.k_ivdc, d.pi.kp, d.pi.ki, bound
    ))
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), n)
}

/// The loop gain selected by the `margins.*` keys.
pub fn selected_loop(cfg: &ToolConfig) -> wptrx_core::Result<RationalTF> {
    match cfg.margins.loop_kind {
        LoopKind::Single => {
            let plant = match cfg.margins.plant {
                PlantKind::Wpt => tf_vo(&cfg.plant)?,
                PlantKind::VoltageSource => {
                    let v = match cfg.control.v_in {
                        Some(v) => v,
                        None => steady_state(&cfg.plant)?.v_dc_ss,
                    };
                    voltage_source_buck_tf(v, cfg.plant.l, cfg.plant.c_o, cfg.plant.r)?
                }
            };
            Ok(single_loop_gain(&plant, &CompensatorPI::new(cfg.control.kp, cfg.control.ki)?))
        }
        LoopKind::Inner => inner_loop_gain(&cfg.plant, resolved_design(cfg)?.k_ivdc),
        LoopKind::Outer => outer_loop_gain(&cfg.plant, &resolved_design(cfg)?),
    }
}

fn margins(ctx: &mut Ctx, cfg: &ToolConfig) -> Result<String, CliError> {
    let lg = ctx.core(selected_loop(cfg))?;
    let m: StabilityMargins = ctx.core(loop_margins(&lg, cfg.margins.f_lo, cfg.margins.f_hi))?;
    let loop_name = match cfg.margins.loop_kind {
        LoopKind::Single => format!("single/{}", cfg.margins.plant),
        other => other.to_string(),
    };
    ctx.write(
        "margins.txt",
        &key_values(&[
            ("loop", loop_name.clone()),
            ("crossover_hz", opt(m.crossover_hz)),
            ("phase_margin_deg", opt(m.phase_margin_deg)),
            ("gain_margin_db", n(m.gain_margin_db)),
            ("phase_crossover_hz", opt(m.phase_crossover_hz)),
        ]),
    )?;
    Ok(format!(
        "margins ({loop_name}): crossover {} Hz, PM {} deg, GM {} dB",
        m.crossover_hz.map_or("none".into(), |x| format!("{x:.1}")),
        m.phase_margin_deg.map_or("none".into(), |x| format!("{x:.2}")),
        if m.gain_margin_db.is_finite() { format!("{:.2}", m.gain_margin_db) } else { "inf".into() }
    ))
}

fn closedloop(ctx: &mut Ctx, cfg: &ToolConfig) -> Result<String, CliError> {
    let c = &cfg.closedloop;
    let plant = match c.plant {
        PlantKind::Wpt => ClosedLoopPlant::Wpt,
        PlantKind::VoltageSource => ClosedLoopPlant::VoltageSource { v_in: v_in(ctx, cfg)? },
    };
    let gain_step = c.scenario == ScenarioKind::GainStep;
    let (controller, kp_after) = match c.controller {
        ControllerKind::Single => {
            let kp = if gain_step { c.kp_before } else { cfg.control.kp };
            let pi = ctx.core(CompensatorPI::new(kp, cfg.control.ki))?;
            (ControllerSpec::SinglePi(pi), cfg.control.kp)
        }
        ControllerKind::Dual => {
            let mut d = ctx.core(resolved_design(cfg))?;
            let after = d.pi.kp;
            if gain_step {
                d.pi.kp = c.kp_before;
            }
            (ControllerSpec::DualLoop(d), after)
        }
    };
    let scenario = if gain_step {
        ClosedLoopScenario::GainStep {
            kp_after,
            t_step: c.t_step,
            duration: c.duration,
        }
    } else {
        ClosedLoopScenario::ReferenceStep {
            fraction: c.ref_step,
            t_step: c.t_step,
            duration: c.duration,
        }
    };
    let opts = RunOptions {
        dt_max: cfg.sim.dt,
        recording: Recording::CycleOnly,
        preroll: cfg.sim.preroll,
    };
    let r = ctx.core(closed_loop_sim(&cfg.plant, plant, controller, scenario, opts))?;
    write_cycles(ctx, &r.trace)?;
    let verdict = match r.verdict {
        Verdict::Converged => "converged",
        Verdict::Diverged => "diverged",
    };
    ctx.write(
        "closedloop.txt",
        &key_values(&[
            ("verdict", verdict.into()),
            ("v_ref_v", n(r.v_ref)),
            ("max_rel_dev", n(r.max_rel_dev)),
            ("mean_rel_error", n(r.mean_rel_error)),
            ("outcome", outcome_text(&r.trace)),
        ]),
    )?;
    Ok(format!(
        "closedloop: {verdict} ({} controller, {} plant, {}); final-window deviation {:.3}%",
        c.controller,
        c.plant,
        c.scenario,
        100.0 * r.max_rel_dev
    ))
}
