use grid_entropy_core::prokhorov::max_deficiency;
use grid_entropy_core::{prokhorov_brute, prokhorov_distance, Measure};
use proptest::prelude::*;

/// Positions on a coarse grid so that ties between distances are common.
fn measure(max_atoms: usize) -> impl Strategy<Value = Measure> {
    prop::collection::vec((0u32..=20, 0.1f64..2.0), 0..=max_atoms).prop_map(|atoms| {
        Measure::from_atoms(atoms.into_iter().map(|(k, m)| (f64::from(k) / 20.0, m))).unwrap()
    })
}

fn continuous_measure(max_atoms: usize) -> impl Strategy<Value = Measure> {
    prop::collection::vec((0.0f64..=1.0, 0.1f64..2.0), 1..=max_atoms)
        .prop_map(|atoms| Measure::from_atoms(atoms).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn flow_matches_subset_oracle(mu in measure(8), nu in measure(8)) {
        let fast = prokhorov_distance(&mu, &nu);
        let slow = prokhorov_brute(&mu, &nu).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-12, "flow {fast} vs brute {slow}");
    }

    #[test]
    fn flow_matches_oracle_off_grid(mu in continuous_measure(7), nu in continuous_measure(7)) {
        let fast = prokhorov_distance(&mu, &nu);
        let slow = prokhorov_brute(&mu, &nu).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-12, "flow {fast} vs brute {slow}");
    }

    #[test]
    fn weaker_than_total_variation(mu in measure(10), nu in measure(10)) {
        prop_assert!(prokhorov_distance(&mu, &nu) <= mu.tv_distance(&nu) + 1e-12);
    }

    #[test]
    fn subadditive_under_sums(a in measure(5), b in measure(5), c in measure(5), d in measure(5)) {
        let lhs = prokhorov_distance(&a.add(&b), &c.add(&d));
        let rhs = prokhorov_distance(&a, &c) + prokhorov_distance(&b, &d);
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn metric_laws(a in measure(6), b in measure(6), c in measure(6)) {
        let ab = prokhorov_distance(&a, &b);
        prop_assert_eq!(ab, prokhorov_distance(&b, &a));
        prop_assert!(ab <= prokhorov_distance(&a, &c) + prokhorov_distance(&c, &b) + 1e-12);
        prop_assert_eq!(prokhorov_distance(&a, &a), 0.0);
        if a != b {
            prop_assert!(ab > 0.0);
        }
    }

    #[test]
    fn deficiency_is_monotone_in_radius(mu in measure(6), nu in measure(6), r in 0.0f64..1.0) {
        let tight = max_deficiency(&mu, &nu, r, true);
        let loose = max_deficiency(&mu, &nu, r, false);
        let wider = max_deficiency(&mu, &nu, r + 0.05, true);
        prop_assert!(loose <= tight + 1e-12);
        prop_assert!(wider <= loose + 1e-12);
    }

    #[test]
    fn tv_is_a_metric(a in measure(6), b in measure(6), c in measure(6)) {
        let ab = a.tv_distance(&b);
        prop_assert_eq!(ab, b.tv_distance(&a));
        prop_assert!(ab <= a.tv_distance(&c) + c.tv_distance(&b) + 1e-12);
        prop_assert_eq!(a.tv_distance(&a), 0.0);
        prop_assert!((a.add(&b).tv_norm() - (a.tv_norm() + b.tv_norm())).abs() <= 1e-12);
    }
}
