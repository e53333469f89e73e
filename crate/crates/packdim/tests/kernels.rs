use proptest::prelude::*;

use packdim::fields::{DriftSpec, FieldSpec};
use packdim::kernels::{expected_ball_mass, h_fx, kernel_f_beta, kernel_g_d, KernelContext, Mode};
use packdim::measures::DiscreteMeasure;

fn measure(dim: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((prop::collection::vec(0.0f64..1.0, dim), 0.1f64..1.0), 1..16).prop_map(move |atoms| {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let (pts, w): (Vec<_>, Vec<_>) = atoms.into_iter().map(|(p, w)| (p, w / total)).unzip();
        DiscreteMeasure::new(dim, pts, w).unwrap()
    })
}

fn radii() -> impl Strategy<Value = (f64, f64)> {
    (1e-4f64..1.0, 1.0f64..4.0).prop_map(|(r, f)| (r, r * f))
}

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Image), Just(Mode::Graph)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn profile_kernels_monotone(mu in measure(2), beta in 0.1f64..2.0, (r, s) in radii()) {
        let x = mu.atom(0).to_vec();
        prop_assert!(kernel_f_beta(&mu, beta, &x, r).unwrap() <= kernel_f_beta(&mu, beta, &x, s).unwrap());
        prop_assert!(kernel_g_d(&mu, 1, 1, &x, r).unwrap() <= kernel_g_d(&mu, 1, 1, &x, s).unwrap());
    }

    #[test]
    fn field_kernels_monotone(mu in measure(1), alpha in 0.05f64..0.95, d in 1usize..=3, m in mode(), (r, s) in radii()) {
        let ctx = KernelContext::new(FieldSpec::new(alpha, 1, d).unwrap(), DriftSpec::Zero, mu, m).unwrap();
        let t = ctx.measure.atom(0).to_vec();
        let u = ctx.measure.atom(ctx.measure.len() - 1).to_vec();
        prop_assert!(h_fx(&ctx, &t, &u, r).unwrap() <= h_fx(&ctx, &t, &u, s).unwrap());
        prop_assert!(expected_ball_mass(&ctx, &t, r).unwrap() <= expected_ball_mass(&ctx, &t, s).unwrap());
    }

    #[test]
    fn constant_drift_leaves_h_unchanged(
        mu in measure(1),
        alpha in 0.05f64..0.95,
        c in prop::collection::vec(-10.0f64..10.0, 2),
        m in mode(),
        r in 1e-4f64..2.0,
    ) {
        let spec = FieldSpec::new(alpha, 1, 2).unwrap();
        let plain = KernelContext::new(spec, DriftSpec::Zero, mu.clone(), m).unwrap();
        let moved = KernelContext::new(spec, DriftSpec::Constant { c }, mu, m).unwrap();
        for t in plain.measure.atoms() {
            for s in plain.measure.atoms() {
                prop_assert_eq!(h_fx(&plain, t, s, r).unwrap().to_bits(), h_fx(&moved, t, s, r).unwrap().to_bits());
            }
        }
    }

    #[test]
    fn two_point_expectation_is_symmetric(t in 0.0f64..1.0, s in 0.0f64..1.0, alpha in 0.05f64..0.95, r in 1e-3f64..2.0) {
        prop_assume!(t != s);
        let mu = DiscreteMeasure::uniform(1, vec![vec![t], vec![s]]).unwrap();
        let ctx = KernelContext::new(FieldSpec::new(alpha, 1, 1).unwrap(), DriftSpec::Zero, mu, Mode::Image).unwrap();
        let a = expected_ball_mass(&ctx, &[t], r).unwrap();
        let b = expected_ball_mass(&ctx, &[s], r).unwrap();
        prop_assert!((a - b).abs() <= 1e-15, "{} vs {}", a, b);
    }
}
