use proptest::prelude::*;

use packdim::fractals::{
    build_tx_system, build_uniform_cantor, natural_measure, Coverable, NestedIntervalSystem, SymbolicScaleSystem,
};
use packdim::numerics::LogValue;

/// Segments of length eps placed one at a time, each starting at the first
/// uncovered point.
fn brute_force_cover(sys: &NestedIntervalSystem, eps: f64) -> u64 {
    let k = (0..=sys.depth()).find(|&k| sys.delta(k) <= eps).expect("scale resolved by the system");
    let mut count = 0;
    let mut reach = f64::NEG_INFINITY;
    for (a, b) in sys.intervals(k).unwrap() {
        while b > reach + 1e-12 * eps {
            reach = if a > reach { a + eps } else { reach + eps };
            count += 1;
        }
    }
    count
}

fn cantor_params() -> impl Strategy<Value = (usize, f64)> {
    (2usize..=4).prop_flat_map(|n| (Just(n), 0.05f64..0.9).prop_map(move |(n, u)| (n, u / n as f64)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covering_matches_brute_force((n, ratio) in cantor_params()) {
        let levels = 6;
        let sys = build_uniform_cantor(n, ratio, levels).unwrap();
        let sym = SymbolicScaleSystem::uniform_cantor(n, ratio, levels).unwrap();
        for j in 1..40 {
            let eps = 2f64.powi(-j);
            if eps < sys.delta(levels) {
                break;
            }
            let expected = brute_force_cover(&sys, eps);
            let inv = LogValue::from_value(1.0 / eps).unwrap();
            let explicit = sys.covering_count(inv).unwrap().value().round() as u64;
            prop_assert_eq!(explicit, expected, "explicit count at eps 2^-{}", j);
            // the symbolic count declines scales it cannot resolve
            if let Ok(c) = sym.covering_count(inv) {
                prop_assert_eq!(c.value().round() as u64, expected, "symbolic count at eps 2^-{}", j);
            }
        }
    }

    #[test]
    fn tx_systems_satisfy_their_constraints(beta in 0.05f64..0.95, delta0 in 0.01f64..0.49, levels in 1usize..30) {
        let tx = build_tx_system(beta, delta0, levels).unwrap();
        prop_assert!(tx.check_tx_invariants().is_ok());
        for k in 1..=levels {
            let lv = &tx.levels[k];
            prop_assert!(lv.log_inv_delta() > lv.log_inv_eta().unwrap());
        }
    }

    #[test]
    fn realized_systems_are_feasible(beta in 0.05f64..0.95, delta0 in 0.01f64..0.49) {
        let tx = build_tx_system(beta, delta0, 2).unwrap();
        if let Ok(sys) = tx.realize_explicit(2) {
            prop_assert!(sys.check_invariants().is_ok());
            for k in 1..=2 {
                let lv = &sys.levels[k];
                let lhs = lv.branches() as f64 * (lv.eta.unwrap() + lv.delta);
                prop_assert!(lhs <= sys.delta(k - 1) * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn natural_measure_splits_evenly((n, ratio) in cantor_params(), k in 1usize..=6) {
        let sys = build_uniform_cantor(n, ratio, k).unwrap();
        prop_assert!(sys.check_invariants().is_ok());
        let mu = natural_measure(&sys, k).unwrap();
        let parents = sys.lefts(k - 1).unwrap();
        let up = mu
            .pushforward(|x| {
                let i = parents.partition_point(|&p| p <= x[0]) - 1;
                vec![parents[i]]
            })
            .unwrap();
        prop_assert_eq!(up.len(), parents.len());
        let expected = 1.0 / sys.count(k - 1);
        for &w in up.weights() {
            if n.is_power_of_two() {
                prop_assert_eq!(w, expected);
            } else {
                prop_assert!((w / expected - 1.0).abs() < 1e-13);
            }
        }
    }
}
