use wptrx_core::control::{
    closed_loop_sim, design_dual_loop, ClosedLoopPlant, ClosedLoopScenario, CompensatorPI, ControllerSpec, Verdict,
};
use wptrx_core::model::steady_state;
use wptrx_core::netan::{analytic_tf, probe_point, ProbeConfig};
use wptrx_core::sim::{Recording, RunOptions, Signal};
use wptrx_core::tf::wrap_deg;
use wptrx_core::ReceiverParams;

fn cycle_only() -> RunOptions {
    RunOptions {
        recording: Recording::CycleOnly,
        ..RunOptions::default()
    }
}

fn probe_errors(p: &ReceiverParams, amp: f64, f: f64) -> Vec<(f64, f64)> {
    let cfg = ProbeConfig {
        amp,
        ..ProbeConfig::default()
    };
    probe_point(p, &cfg, f)
        .unwrap()
        .iter()
        .map(|m| {
            let g = analytic_tf(p, m.signal).unwrap().eval_hz(m.freq).unwrap();
            (
                m.mag_db - 20.0 * g.norm().log10(),
                wrap_deg(m.phase_deg - g.arg().to_degrees()),
            )
        })
        .collect()
}

#[test]
fn probe_matches_analytic_at_2khz() {
    let p = ReceiverParams::prototype();
    for (db, deg) in probe_errors(&p, 0.005, 2000.0) {
        assert!(db.abs() < 0.05 && deg.abs() < 0.5, "{db} dB {deg}°");
    }
}

#[test]
fn probe_error_shrinks_with_amplitude() {
    // Near the resonance the large-signal distortion dominates the error.
    let p = ReceiverParams::prototype();
    let worst = |amp| {
        probe_errors(&p, amp, 2857.0)
            .into_iter()
            .map(|(db, _)| db.abs())
            .fold(0.0, f64::max)
    };
    let e: Vec<f64> = [0.02, 0.01, 0.005].into_iter().map(worst).collect();
    assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
}

#[test]
fn probe_is_deterministic() {
    let p = ReceiverParams::prototype();
    let cfg = ProbeConfig::default();
    let a = probe_point(&p, &cfg, 1500.0).unwrap();
    let b = probe_point(&p, &cfg, 1500.0).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.mag_db.to_bits(), y.mag_db.to_bits());
        assert_eq!(x.phase_deg.to_bits(), y.phase_deg.to_bits());
    }
    assert_eq!(a.map(|m| m.signal), Signal::ALL);
}

#[test]
fn single_pi_gain_step_separates_the_plants() {
    let p = ReceiverParams::prototype();
    let v_in = steady_state(&p).unwrap().v_dc_ss;
    let pi = ControllerSpec::SinglePi(CompensatorPI::new(0.016, 10.0).unwrap());
    let step = ClosedLoopScenario::GainStep {
        kp_after: 0.1,
        t_step: 5e-3,
        duration: 25e-3,
    };
    let wpt = closed_loop_sim(&p, ClosedLoopPlant::Wpt, pi, step, cycle_only()).unwrap();
    let vs = closed_loop_sim(&p, ClosedLoopPlant::VoltageSource { v_in }, pi, step, cycle_only()).unwrap();
    assert_eq!(wpt.verdict, Verdict::Diverged);
    assert_eq!(vs.verdict, Verdict::Converged);
    // Before the step both loops hold the operating point.
    let op = steady_state(&p).unwrap();
    for r in [&wpt, &vs] {
        let pre = r.trace.cycles_in(3e-3, 5e-3);
        assert!(pre.iter().all(|c| (c.v_o - op.v_o_ss).abs() < 1e-3 * op.v_o_ss));
    }
}

#[test]
fn dual_loop_tracks_reference_steps() {
    let p = ReceiverParams::prototype();
    let design = design_dual_loop(&p).unwrap();
    for fraction in [0.05, -0.05] {
        let r = closed_loop_sim(
            &p,
            ClosedLoopPlant::Wpt,
            ControllerSpec::DualLoop(design),
            ClosedLoopScenario::ReferenceStep {
                fraction,
                t_step: 2e-3,
                duration: 22e-3,
            },
            cycle_only(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Converged);
        let tail = r.trace.cycles_in(21e-3, 22e-3);
        assert!(tail.iter().all(|c| (c.v_o - r.v_ref).abs() < 0.005 * r.v_ref));
    }
}
