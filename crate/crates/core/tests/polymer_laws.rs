//! Statistical and monotonicity checks of the polymer measures.

use std::collections::HashMap;

use grid_entropy_core::lattice::path_weight;
use grid_entropy_core::math::{ln_big, log_sum_exp};
use grid_entropy_core::polymer::{
    empirical_convergence_diagnostic, last_passage, log_partition_point, DpMode, DpTable, LevelTable,
};
use grid_entropy_core::{path_count, CounterRng, Direction, Environment, LatticePoint, Measure, Path, PathEnumerator, TauFn};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_p(observed: &[u64], probabilities: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(probabilities)
        .map(|(&o, &p)| {
            let e = total as f64 * p;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    1.0 - ChiSquared::new((observed.len() - 1) as f64).unwrap().cdf(stat)
}

/// Exact law of the point-to-point polymer, by enumeration.
fn exact_law(env: &Environment, end: &LatticePoint, beta: f64, tau: &TauFn) -> (HashMap<Vec<usize>, usize>, Vec<f64>) {
    let mut index = HashMap::new();
    let mut log_w = Vec::new();
    PathEnumerator::new(env)
        .for_each_to(end, |v| {
            index.insert(v.steps.to_vec(), log_w.len());
            log_w.push(beta * path_weight(env, tau, &v.to_path()));
        })
        .unwrap();
    let log_z = log_sum_exp(log_w.iter().copied());
    (index, log_w.iter().map(|w| (w - log_z).exp()).collect())
}

fn tally(index: &HashMap<Vec<usize>, usize>, paths: impl Iterator<Item = Path>) -> Vec<u64> {
    let mut counts = vec![0u64; index.len()];
    for p in paths {
        counts[index[&p.steps]] += 1;
    }
    counts
}

#[test]
fn zero_temperature_sampler_is_uniform() {
    let env = Environment::new(17, 2);
    let end = LatticePoint::new(vec![2, 2]);
    let tau = TauFn::identity_ladder(8).unwrap();
    let (index, probs) = exact_law(&env, &end, 0.0, &tau);
    assert!(probs.iter().all(|&p| (p - 1.0 / 6.0).abs() < 1e-12));
    let table = DpTable::point_to_point(&env, &end, &tau, DpMode::Softmax { beta: 0.0 });
    let counts = tally(&index, (0..100_000).map(|i| table.sample_path(&mut CounterRng::new(9, i))));
    let p = chi_square_p(&counts, &probs);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn point_sampler_follows_the_gibbs_law() {
    let env = Environment::new(3, 3);
    let end = LatticePoint::new(vec![2, 1, 2]);
    let tau = TauFn::identity_ladder(16).unwrap();
    let (index, probs) = exact_law(&env, &end, 1.5, &tau);
    let table = DpTable::point_to_point(&env, &end, &tau, DpMode::Softmax { beta: 1.5 });
    let counts = tally(&index, (0..120_000).map(|i| table.sample_path(&mut CounterRng::new(4, i))));
    let p = chi_square_p(&counts, &probs);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn level_sampler_follows_the_gibbs_law() {
    let env = Environment::new(6, 2);
    let tau = TauFn::identity_ladder(16).unwrap();
    let beta = 2.0;
    let n = 4u32;
    let mut index = HashMap::new();
    let mut log_w = Vec::new();
    PathEnumerator::new(&env)
        .for_each_of_length(u64::from(n), |v| {
            index.insert(v.steps.to_vec(), log_w.len());
            log_w.push(beta * path_weight(&env, &tau, &v.to_path()));
        })
        .unwrap();
    let log_z = log_sum_exp(log_w.iter().copied());
    let probs: Vec<f64> = log_w.iter().map(|w| (w - log_z).exp()).collect();
    let table = LevelTable::build(&env, n, beta, &tau);
    assert!((table.log_partition() - log_z).abs() < 1e-10);
    let counts = tally(&index, (0..100_000).map(|i| table.sample_path(&mut CounterRng::new(5, i))));
    let p = chi_square_p(&counts, &probs);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn free_energy_decreases_toward_last_passage() {
    let tau = TauFn::identity_ladder(16).unwrap();
    for seed in 0..4 {
        let env = Environment::new(seed, 2);
        for end in [LatticePoint::new(vec![5, 4]), LatticePoint::new(vec![8, 8])] {
            let (lpp, path) = last_passage(&env, &end, &tau);
            let argmax = DpTable::point_to_point(&env, &end, &tau, DpMode::MaxPlus).argmax_path();
            assert_eq!(argmax, path);
            let log_count = ln_big(&path_count(&end));
            let mut previous = f64::INFINITY;
            for beta in [0.5, 1.0, 2.0, 5.0, 20.0, 100.0] {
                let soft = log_partition_point(&env, &end, beta, &tau) / beta;
                assert!(soft <= previous + 1e-12, "not monotone at beta = {beta}");
                assert!(soft >= lpp - 1e-12 && soft <= lpp + log_count / beta + 1e-12);
                previous = soft;
            }
        }
    }
}

#[test]
fn infinite_temperature_mean_measure_approaches_lebesgue() {
    let env = Environment::new(21, 2);
    let q: Direction = "1/2,1/2".parse().unwrap();
    let lambda = Measure::lebesgue(64).unwrap();
    let rows =
        empirical_convergence_diagnostic(&env, &q, 0.0, &TauFn::zero(), &[32, 128, 512], 64, 7, 128, &[lambda]).unwrap();
    let distances: Vec<f64> = rows.iter().map(|r| r.to_candidates[0]).collect();
    assert!(distances.windows(2).all(|w| w[1] < w[0]), "{distances:?}");
    assert!(distances[2] < 0.05, "{distances:?}");
}
