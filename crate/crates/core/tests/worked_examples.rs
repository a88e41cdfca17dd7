//! Small worked examples, each checked against an independent oracle:
//! subset enumeration, exhaustive path DFS or a closed form.

use grid_entropy_core::estimators::{
    eps_sum, eps_sum_level, estimate_entropy_orderstats, order_stat_series, Ladder, OrderStatsPlan,
};
use grid_entropy_core::lattice::{path_weight, Rational};
use grid_entropy_core::math::{ln, ln_big};
use grid_entropy_core::polymer::{last_passage, log_partition_level, log_partition_point};
use grid_entropy_core::prokhorov::max_deficiency;
use grid_entropy_core::variational::{bernoulli_exponent_check, integral};
use grid_entropy_core::{
    path_count, prokhorov_brute, prokhorov_distance, shannon_entropy, Direction, Environment, Histogram, LatticePoint,
    Measure, PathEnumerator, TauFn,
};

fn dirac(x: f64, m: f64) -> Measure {
    Measure::dirac(x, m).unwrap()
}

fn pt(c: &[u32]) -> LatticePoint {
    LatticePoint::new(c.to_vec())
}

#[test]
fn distances_agree_with_subset_enumeration() {
    let cases = [
        (dirac(0.0, 1.0), dirac(0.0, 1.0), 0.0),
        (dirac(0.0, 1.0), dirac(1.0, 1.0), 1.0),
        (dirac(0.3, 2.0), dirac(0.3, 1.0), 1.0),
    ];
    for (mu, nu, expected) in cases {
        assert_eq!(prokhorov_distance(&mu, &nu), expected);
        assert_eq!(prokhorov_brute(&mu, &nu).unwrap(), expected);
    }
}

#[test]
fn deficiency_follows_admissible_edges() {
    let (a, b) = (dirac(0.2, 1.0), dirac(0.5, 1.0));
    assert_eq!(max_deficiency(&a, &b, 0.1, false), 1.0);
    assert_eq!(max_deficiency(&a, &b, 0.4, false), 0.0);
    let mu = Measure::from_atoms([(0.1, 3.0), (0.9, 2.0)]).unwrap();
    assert_eq!(max_deficiency(&mu, &mu, 0.0, false), 0.0);
    assert_eq!(mu.tv_norm(), 5.0);
}

#[test]
fn path_counts_match_exhaustive_enumeration() {
    for end in [pt(&[2, 2]), pt(&[4, 0]), pt(&[3, 2, 1]), pt(&[2, 1, 1, 1])] {
        let env = Environment::new(0, end.dim());
        let visited = PathEnumerator::new(&env).for_each_to(&end, |_| {}).unwrap();
        assert_eq!(path_count(&end).to_string(), visited.to_string());
    }
    assert_eq!(path_count(&pt(&[3, 2, 1])).to_string(), "60");
}

#[test]
fn shannon_entropy_matches_count_growth() {
    let q: Direction = "2/3,1/3".parse().unwrap();
    let closed = ln(3.0) - (2.0 / 3.0) * ln(2.0);
    assert!((shannon_entropy(&q) - closed).abs() < 1e-12);
    let growth = ln_big(&path_count(&q.floor_scaled(3000))) / 3000.0;
    assert!((growth - closed).abs() < 5e-3, "{growth}");
    assert_eq!(shannon_entropy(&"1,0".parse().unwrap()), 0.0);
}

#[test]
fn environment_labels_are_uniform_on_average() {
    let env = Environment::new(2024, 2);
    let mut sum = 0.0;
    for x in 0..1000u32 {
        for y in 0..500u32 {
            sum += env.edge_label(&[x, y], 0) + env.edge_label(&[x, y], 1);
        }
    }
    let mean = sum / 1e6;
    assert!((mean - 0.5).abs() < 0.002, "{mean}");
}

#[test]
fn kl_divergence_examples() {
    assert!(Histogram::uniform(16).unwrap().kl_divergence().unwrap().abs() < 1e-15);
    let mut half = vec![0.0; 16];
    half[..8].iter_mut().for_each(|m| *m = 1.0 / 8.0);
    let kl = Histogram::new(half).unwrap().kl_divergence().unwrap();
    assert!((kl - ln(2.0)).abs() < 1e-12);
    assert_eq!(dirac(0.5, 1.0).kl_divergence().unwrap(), f64::INFINITY);
}

#[test]
fn integrals_against_lebesgue() {
    let lambda = Measure::lebesgue(64).unwrap();
    assert!((integral(&TauFn::constant(1.0), &lambda) - 1.0).abs() < 1e-12);
    assert_eq!(integral(&TauFn::zero(), &lambda), 0.0);
    assert!((integral(&TauFn::indicator_from(0.5), &lambda) - 0.5).abs() < 1e-12);
}

#[test]
fn order_statistics_reach_zero_and_infinity() {
    let env = Environment::new(5, 2);
    let q: Direction = "1,1".parse().unwrap();
    // a target equal to one enumerated path's normalized measure
    let mut first = None;
    PathEnumerator::new(&env)
        .for_each_to(&q.floor_scaled(2), |v| {
            if first.is_none() {
                first = Some(v.measure(0.5));
            }
        })
        .unwrap();
    let target = first.unwrap();
    let series = order_stat_series(&env, &q, &target, 2, &[1, 7], 1 << 20).unwrap();
    assert_eq!(series.path_count, 6);
    assert_eq!(series.values, vec![0.0, f64::INFINITY]);
}

#[test]
fn eps_sums_at_degenerate_sizes() {
    let env = Environment::new(3, 2);
    let lambda = Measure::lebesgue(8).unwrap();
    // t = 0 leaves only the empty path
    let zero = Rational::integer(0);
    assert_eq!(eps_sum_level(&env, zero, &Measure::zero(), 4, 1.0, 1 << 20).unwrap(), 0.0);
    let v = eps_sum_level(&env, zero, &lambda, 4, 0.5, 1 << 20).unwrap();
    // rho(0, lambda) = |lambda| = 1, so the value is -1 / eps
    assert!((v + 2.0).abs() < 1e-12, "{v}");
    // a single path in direction (1, 0)
    let q: Direction = "1,0".parse().unwrap();
    let v = eps_sum(&env, &q, &lambda, 6, 1.0, 1 << 20).unwrap();
    assert!(v <= 1e-12);
}

#[test]
fn unreachable_and_single_path_entropies() {
    let q: Direction = "1/2,1/2".parse().unwrap();
    let plan = OrderStatsPlan {
        alphas: vec![0.0, 0.1],
        resolution: 1.0 / 128.0,
    };
    let ladder = Ladder::new(2, vec![1], vec![4, 6]);
    let heavy = Measure::lebesgue(64).unwrap().scale(2.0).unwrap();
    let est = estimate_entropy_orderstats(&ladder, &q, &heavy, &plan).unwrap();
    assert_eq!(est.value, f64::NEG_INFINITY);

    // one path per scale; its labels need long paths to look uniform
    let single: Direction = "1,0".parse().unwrap();
    let long = Ladder::new(2, vec![1, 2, 3], vec![64, 256, 1024]);
    let coarse = OrderStatsPlan {
        alphas: vec![0.0, 0.1],
        resolution: 1.0 / 16.0,
    };
    let est = estimate_entropy_orderstats(&long, &single, &Measure::lebesgue(64).unwrap(), &coarse).unwrap();
    assert_eq!(est.value, 0.0);
}

#[test]
fn partition_functions_in_closed_form() {
    let env = Environment::new(8, 3);
    let end = pt(&[2, 3, 1]);
    let z0 = log_partition_point(&env, &end, 1.0, &TauFn::zero());
    assert!((z0 - ln_big(&path_count(&end))).abs() < 1e-12);
    let one = pt(&[1, 0, 0]);
    let tau = TauFn::identity_ladder(16).unwrap();
    let expected = 2.0 * tau.eval(env.edge_label(&[0, 0, 0], 0));
    assert!((log_partition_point(&env, &one, 2.0, &tau) - expected).abs() < 1e-12);

    let n = 7u32;
    let level0 = log_partition_level(&env, n, 1.0, &TauFn::zero());
    assert!((level0 - f64::from(n) * ln(3.0)).abs() < 1e-10);
    let c = 0.3;
    let level_c = log_partition_level(&env, n, 2.0, &TauFn::constant(c));
    assert!((level_c - f64::from(n) * (2.0 * c + ln(3.0))).abs() < 1e-10);
}

#[test]
fn last_passage_examples() {
    let env = Environment::new(4, 2);
    let end = pt(&[4, 3]);
    let (t, _) = last_passage(&env, &end, &TauFn::constant(0.25));
    assert!((t - 0.25 * 7.0).abs() < 1e-12);
    let straight = pt(&[5, 0]);
    let tau = TauFn::identity_ladder(8).unwrap();
    let (t, path) = last_passage(&env, &straight, &tau);
    assert!((t - path_weight(&env, &tau, &path)).abs() < 1e-12);
    let direct: f64 = (0..5u32).map(|x| tau.eval(env.edge_label(&[x, 0], 0))).sum();
    assert!((t - direct).abs() < 1e-12);
}

#[test]
fn bernoulli_exponent_below_the_mean_is_log_d() {
    let r = bernoulli_exponent_check(2, 0.5, 0.3, &[60], &[1, 2]).unwrap();
    assert_eq!(r.budget, ln(2.0));
    assert!((r.measured - ln(2.0)).abs() < 0.02, "{}", r.measured);
}
