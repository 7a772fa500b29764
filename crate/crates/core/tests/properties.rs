use num_complex::Complex64;
use proptest::prelude::*;
use wptrx_core::control::{characteristic_stability, design_dual_loop, kp_bound, outer_loop_gain, Stability};
use wptrx_core::model::{averaged_derivatives, linearize, steady_state};
use wptrx_core::tf::{closed_form_zero_vo, pole_zero_map, shared_denominator, tf_il, tf_vdc, tf_vo};
use wptrx_core::ReceiverParams;

fn params() -> impl Strategy<Value = ReceiverParams> {
    (
        50e3f64..500e3,
        0.2f64..5.0,
        5e-6f64..200e-6,
        10e-6f64..500e-6,
        5e-6f64..200e-6,
        1.0f64..50.0,
        0.1f64..0.9,
    )
        .prop_map(|(f, i, c_dc, l, c_o, r, d)| ReceiverParams::new(f, i, c_dc, l, c_o, r, d).unwrap())
}

/// Random points in the right half of the s-plane and on the jω axis,
/// scaled to the plant's pole magnitudes.
fn s_points() -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-1.0f64..1.0, -6.0f64..6.0, 0.0f64..1.0), 20).prop_map(|v| {
        v.into_iter()
            .map(|(re, lg, sgn)| {
                let im = 10f64.powf(lg.abs() - 1.0).copysign(if sgn < 0.5 { -1.0 } else { 1.0 });
                Complex64::new(re * im.abs(), im)
            })
            .collect()
    })
}

fn rel(a: Complex64, b: Complex64, scale: f64) -> f64 {
    (a - b).norm() / scale
}

fn match_sets(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .map(|x| b.iter().map(|y| (x - y).norm() / y.norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn small_signal_identities(p in params(), points in s_points()) {
        let op = steady_state(&p).unwrap();
        let (gd, gi, go) = (tf_vdc(&p).unwrap(), tf_il(&p).unwrap(), tf_vo(&p).unwrap());
        let d = p.d_nom;
        for s in points {
            let (vd, il, vo) = (gd.eval_s(s), gi.eval_s(s), go.eval_s(s));
            // Each side is a sum of terms; compare against the largest.
            let lhs = s * p.c_dc * vd;
            let rhs = -d * il - op.i_l_ss;
            let scale = lhs.norm().max((d * il).norm()).max(op.i_l_ss);
            prop_assert!(rel(lhs, rhs, scale) < 1e-9, "dc link at {s}");

            let lhs = s * p.l * il;
            let rhs = d * vd + op.v_dc_ss - vo;
            let scale = lhs.norm().max((d * vd).norm()).max(op.v_dc_ss).max(vo.norm());
            prop_assert!(rel(lhs, rhs, scale) < 1e-9, "inductor at {s}");

            let lhs = s * p.c_o * vo;
            let rhs = il - vo / p.r;
            let scale = lhs.norm().max(il.norm()).max((vo / p.r).norm());
            prop_assert!(rel(lhs, rhs, scale) < 1e-9, "output at {s}");

            let z = p.r / (1.0 + s * p.c_o * p.r);
            prop_assert!(rel(vo / il, z, z.norm()) < 1e-9);
        }
    }

    #[test]
    fn equilibrium_is_stationary(p in params()) {
        let op = steady_state(&p).unwrap();
        let x = averaged_derivatives(&op.as_state(), p.d_nom, &p).unwrap();
        let scales = [p.rectified_mean() / p.c_dc, op.v_dc_ss / p.l, op.i_l_ss / p.c_o];
        for (v, s) in x.as_array().into_iter().zip(scales) {
            prop_assert!(v.abs() <= 8.0 * f64::EPSILON * s, "{v} vs {s}");
        }
    }

    #[test]
    fn plant_is_hurwitz_and_eigenvalues_match_denominator(p in params()) {
        let eig = linearize(&p).unwrap().eigenvalues();
        prop_assert!(eig.iter().all(|z| z.re < 0.0));
        let roots = shared_denominator(&p).unwrap().roots().unwrap();
        prop_assert_eq!(roots.len(), 3);
        prop_assert!(match_sets(&eig, &roots) < 1e-9);
        prop_assert!(match_sets(&roots, &eig) < 1e-9);
    }

    #[test]
    fn steady_state_is_linear_in_source_current(p in params(), k in 0.1f64..10.0) {
        let a = steady_state(&p).unwrap();
        let b = steady_state(&ReceiverParams { i_ls_amp: k * p.i_ls_amp, ..p }).unwrap();
        for (x, y) in [(a.v_dc_ss, b.v_dc_ss), (a.i_l_ss, b.i_l_ss), (a.v_o_ss, b.v_o_ss)] {
            prop_assert!((k * x - y).abs() <= 1e-12 * y.abs());
        }
    }

    #[test]
    fn shared_denominator_and_dc_signs(p in params()) {
        let (gd, gi, go) = (tf_vdc(&p).unwrap(), tf_il(&p).unwrap(), tf_vo(&p).unwrap());
        prop_assert_eq!(&gd.den, &gi.den);
        prop_assert_eq!(&gi.den, &go.den);
        prop_assert!(gd.dc_gain().unwrap() < 0.0);
        prop_assert!(go.dc_gain().unwrap() < 0.0);
    }

    #[test]
    fn rhp_zero_law(p in params()) {
        let zeros = tf_vo(&p).unwrap().zeros().unwrap();
        let positive: Vec<_> = zeros.iter().filter(|z| z.re > 0.0 && z.im == 0.0).collect();
        prop_assert_eq!(positive.len(), 1);
        let expect = p.d_nom * p.d_nom / (p.c_dc * p.r);
        prop_assert!((positive[0].re - expect).abs() <= 1e-12 * expect);
        prop_assert_eq!(closed_form_zero_vo(&p).unwrap(), expect);
    }

    #[test]
    fn transfer_functions_scale_with_source_current(p in params(), k in 0.1f64..10.0) {
        let q = ReceiverParams { i_ls_amp: k * p.i_ls_amp, ..p };
        for (a, b) in [
            (tf_vdc(&p).unwrap(), tf_vdc(&q).unwrap()),
            (tf_il(&p).unwrap(), tf_il(&q).unwrap()),
            (tf_vo(&p).unwrap(), tf_vo(&q).unwrap()),
        ] {
            for f in [1.0, 300.0, 5e3, 80e3] {
                let (x, y) = (a.eval_hz(f).unwrap(), b.eval_hz(f).unwrap());
                prop_assert!((x * k - y).norm() <= 1e-12 * y.norm());
            }
            let (pa, pb) = (pole_zero_map(&a).unwrap(), pole_zero_map(&b).unwrap());
            prop_assert_eq!(&pa.poles, &pb.poles);
            prop_assert!(match_sets(&pa.zeros, &pb.zeros) < 1e-12);
        }
    }

    #[test]
    fn designed_dual_loop_keeps_kp_inside_bound(p in params()) {
        let d = design_dual_loop(&p).unwrap();
        let bound = kp_bound(&p).unwrap();
        prop_assert!(d.pi.kp < bound);
        prop_assert!(d.k_ivdc > 0.0);
        prop_assert_eq!(d.pi.ki, 0.01 * std::f64::consts::PI * p.f * d.pi.kp);
    }
}

#[test]
fn stability_flips_near_kp_bound() {
    let p = ReceiverParams::prototype();
    let base = design_dual_loop(&p).unwrap();
    let bound = kp_bound(&p).unwrap();
    let ratios: Vec<f64> = (0..=40).map(|k| 0.8 + 0.01 * k as f64).collect();
    let stable: Vec<bool> = ratios
        .iter()
        .map(|&r| {
            let mut d = base;
            d.pi.kp = r * bound;
            d.pi.ki = 0.01 * std::f64::consts::PI * p.f * d.pi.kp;
            characteristic_stability(&outer_loop_gain(&p, &d).unwrap()).unwrap() == Stability::Stable
        })
        .collect();
    let flip = stable.iter().position(|s| !s).expect("no unstable kp in grid");
    assert!(stable[..flip].iter().all(|&s| s) && stable[flip..].iter().all(|&s| !s));
    assert!((ratios[flip] - 1.0).abs() <= 0.05, "flip at {}", ratios[flip]);
}
