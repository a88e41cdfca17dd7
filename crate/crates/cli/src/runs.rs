//! Parallel versions of the ladder computations. Work is split into
//! independent (seed, n) tasks and reassembled in canonical order, so the
//! results match the serial library functions bit for bit.

use grid_entropy_core::estimators::{DistanceTable, Ladder};
use grid_entropy_core::lattice::Rational;
use grid_entropy_core::polymer::{free_energy_at, gibbs_from_ladders, Ensemble, GibbsEstimate};
use grid_entropy_core::variational::{conjugate_entropy, tau_ladder_family, ConjugateResult, ConjugateSearch};
use grid_entropy_core::{shannon_entropy, Direction, Environment, Measure, Result, TauFn};
use rayon::ThreadPool;

use crate::parallel::par_map;

fn tasks(seeds: &[u64], scales: &[u64]) -> Vec<(usize, u64, u64)> {
    seeds
        .iter()
        .enumerate()
        .flat_map(|(i, &s)| scales.iter().map(move |&n| (i, s, n)))
        .collect()
}

fn assemble(seeds: &[u64], scales: &[u64], parts: Vec<Result<DistanceTable>>) -> Result<DistanceTable> {
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let per_seed = scales.len();
    let mut rows = Vec::with_capacity(seeds.len());
    for s in 0..seeds.len() {
        rows.push(
            parts[s * per_seed..(s + 1) * per_seed]
                .iter()
                .map(|p| p.rows[0][0].clone())
                .collect(),
        );
    }
    let log_counts = parts[..per_seed].iter().map(|p| p.log_counts[0]).collect();
    Ok(DistanceTable {
        rows,
        scales: scales.to_vec(),
        log_counts,
        limit_rate: parts[0].limit_rate,
    })
}

/// Sorted distances over the paths `0 -> floor(nq)` for every (seed, n).
pub fn direction_table(
    pool: &ThreadPool,
    dim: usize,
    seeds: &[u64],
    scales: &[u64],
    budget: u64,
    q: &Direction,
    target: &Measure,
) -> Result<DistanceTable> {
    let parts = par_map(pool, &tasks(seeds, scales), |&(_, seed, n)| {
        let ladder = Ladder {
            dim,
            seeds: vec![seed],
            scales: vec![n],
            budget,
        };
        DistanceTable::direction(&ladder, q, target)
    });
    assemble(seeds, scales, parts)
}

/// Sorted distances over all paths of length `floor(nt)` for every (seed, n).
pub fn level_table(
    pool: &ThreadPool,
    dim: usize,
    seeds: &[u64],
    scales: &[u64],
    budget: u64,
    t: Rational,
    target: &Measure,
) -> Result<DistanceTable> {
    let parts = par_map(pool, &tasks(seeds, scales), |&(_, seed, n)| {
        let ladder = Ladder {
            dim,
            seeds: vec![seed],
            scales: vec![n],
            budget,
        };
        DistanceTable::level(&ladder, t, target)
    });
    assemble(seeds, scales, parts)
}

/// Per-seed `(n, (1/n) log Z)` ladders.
pub fn free_energy_ladders(
    pool: &ThreadPool,
    ensemble: &Ensemble,
    dim: usize,
    beta: f64,
    tau: &TauFn,
    scales: &[u64],
    seeds: &[u64],
) -> Vec<Vec<(u64, f64)>> {
    let values = par_map(pool, &tasks(seeds, scales), |&(_, seed, n)| {
        free_energy_at(&Environment::new(seed, dim), ensemble, n, beta, tau)
    });
    values
        .chunks(scales.len())
        .map(|chunk| scales.iter().copied().zip(chunk.iter().copied()).collect())
        .collect()
}

pub fn gibbs(
    pool: &ThreadPool,
    ensemble: &Ensemble,
    dim: usize,
    beta: f64,
    tau: &TauFn,
    scales: &[u64],
    seeds: &[u64],
) -> Result<GibbsEstimate> {
    gibbs_from_ladders(&free_energy_ladders(pool, ensemble, dim, beta, tau, scales, seeds))
}

/// Settings for a conjugate run over a `bins`-cell ladder family.
#[derive(Debug, Clone)]
pub struct ConjugatePlan {
    pub search: ConjugateSearch,
    pub bins: usize,
    pub random_taus: usize,
    pub scales: Vec<u64>,
    pub seeds: Vec<u64>,
}

pub fn conjugate(pool: &ThreadPool, q: &Direction, target: &Measure, plan: &ConjugatePlan) -> Result<ConjugateResult> {
    let family = tau_ladder_family(plan.bins, plan.random_taus, plan.search.seed)?;
    let ensemble = Ensemble::Direction(q.clone());
    conjugate_entropy(target, &family, shannon_entropy(q), &plan.search, |tau| {
        gibbs(pool, &ensemble, q.dim(), plan.search.beta, tau, &plan.scales, &plan.seeds)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use grid_entropy_core::polymer::gibbs_estimate;

    #[test]
    fn parallel_tables_match_serial() {
        let pool = crate::parallel::pool();
        let q: Direction = "1/2,1/2".parse().unwrap();
        let target = Measure::lebesgue(8).unwrap();
        let seeds = [3, 1];
        let scales = [4, 6];
        let par = direction_table(&pool, 2, &seeds, &scales, 1 << 20, &q, &target).unwrap();
        let serial = DistanceTable::direction(&Ladder::new(2, seeds.to_vec(), scales.to_vec()), &q, &target).unwrap();
        assert_eq!(par.rows, serial.rows);
        assert_eq!(par.log_counts, serial.log_counts);

        let t = Rational::integer(1);
        let par = level_table(&pool, 2, &seeds, &scales, 1 << 20, t, &target).unwrap();
        let serial = DistanceTable::level(&Ladder::new(2, seeds.to_vec(), scales.to_vec()), t, &target).unwrap();
        assert_eq!(par.rows, serial.rows);

        let tau = TauFn::identity_ladder(4).unwrap();
        let ens = Ensemble::Direction(q.clone());
        let a = gibbs(&pool, &ens, 2, 1.0, &tau, &[16, 32], &seeds).unwrap();
        let b = gibbs_estimate(&ens, 2, 1.0, &tau, &[16, 32], &seeds).unwrap();
        assert_eq!(a, b);
    }
}
