//! Finite-n grid entropy estimators over exhaustive path ensembles.
//!
//! Two path-ensemble formulations are evaluated exactly at each scale `n`:
//! order statistics of `rho(mu_pi / n, nu)` over the paths to `floor(nq)`,
//! and the exponential cost sum `(1/n) log sum_pi exp(-(n/eps) rho)`. Their
//! `n -> infinity` limits are estimated from a ladder of scales.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::lattice::{path_count, shannon_entropy, Direction, LatticePoint, PathEnumerator, Rational};
use crate::math::{exp, extrapolate_inverse_n, floor, ln, ln_big, LogSumExp};
use crate::measure::Measure;
use crate::prokhorov::prokhorov_distance;
use crate::{Environment, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    OrderStats,
    EpsSum,
    Conjugate,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::OrderStats => "orderstats",
            Method::EpsSum => "eps_sum",
            Method::Conjugate => "conjugate",
        }
    }
}

/// `rho(mu_pi / n, nu)` for every NE path `start -> end`, in enumeration order.
pub fn path_distances(
    enumerator: &PathEnumerator<'_>,
    end: &LatticePoint,
    target: &Measure,
    n: u64,
) -> Result<Vec<f64>> {
    let weight = 1.0 / n as f64;
    let mut out = Vec::new();
    enumerator.for_each_to(end, |visit| {
        out.push(prokhorov_distance(&visit.measure(weight), target));
    })?;
    Ok(out)
}

/// Distances for every path of the given length, tagged by endpoint.
pub fn level_distances(
    enumerator: &PathEnumerator<'_>,
    length: u64,
    target: &Measure,
    n: u64,
) -> Result<Vec<(LatticePoint, f64)>> {
    let weight = 1.0 / n as f64;
    let mut out = Vec::new();
    enumerator.for_each_of_length(length, |visit| {
        let rho = prokhorov_distance(&visit.measure(weight), target);
        out.push((LatticePoint::new(visit.end.to_vec()), rho));
    })?;
    Ok(out)
}

/// `(1/n) log sum exp(-(n/eps) rho)` over precomputed distances.
pub fn log_cost_sum(distances: &[f64], n: u64, eps: f64) -> f64 {
    let scale = n as f64 / eps;
    let mut acc = LogSumExp::new();
    for &rho in distances {
        acc.push(-scale * rho);
    }
    acc.value() / n as f64
}

/// Normalized cost sum over the paths `0 -> floor(nq)`.
pub fn eps_sum(
    env: &Environment,
    q: &Direction,
    target: &Measure,
    n: u64,
    eps: f64,
    budget: u64,
) -> Result<f64> {
    check_eps(eps)?;
    let enumerator = PathEnumerator::new(env).with_budget(budget);
    let ds = path_distances(&enumerator, &q.floor_scaled(n), target, n)?;
    Ok(log_cost_sum(&ds, n, eps))
}

/// Normalized cost sum over all paths of length `floor(nt)` from the origin.
pub fn eps_sum_level(
    env: &Environment,
    t: Rational,
    target: &Measure,
    n: u64,
    eps: f64,
    budget: u64,
) -> Result<f64> {
    check_eps(eps)?;
    let enumerator = PathEnumerator::new(env).with_budget(budget);
    let ds = level_distances(&enumerator, t.floor_times(n), target, n)?;
    let rhos: Vec<f64> = ds.into_iter().map(|(_, r)| r).collect();
    Ok(log_cost_sum(&rhos, n, eps))
}

/// Unnormalized cost sum `log sum_{pi: start -> end} exp(-rho(mu_pi, target) / eps)`.
///
/// This is the form that is exactly superadditive under concatenation.
pub fn cost_sum_between(
    env: &Environment,
    start: &LatticePoint,
    end: &LatticePoint,
    target: &Measure,
    eps: f64,
    budget: u64,
) -> Result<f64> {
    check_eps(eps)?;
    let enumerator = PathEnumerator::new(env)
        .starting_at(start.clone())
        .with_budget(budget);
    let mut acc = LogSumExp::new();
    enumerator.for_each_to(end, |visit| {
        acc.push(-prokhorov_distance(&visit.measure(1.0), target) / eps);
    })?;
    Ok(acc.value())
}

/// The deterministic interval every normalized cost sum falls in:
/// `[-(|floor(nq)|_1/n + |nu|)/eps, (|floor(nq)|_1/n) log D]`.
pub fn eps_sum_bounds(path_length: u64, dim: usize, target_mass: f64, n: u64, eps: f64) -> (f64, f64) {
    let scaled = path_length as f64 / n as f64;
    (-(scaled + target_mass) / eps, scaled * ln(dim as f64))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::input("eps must be positive and finite"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct MaxF64(f64);

impl Eq for MaxF64 {}

impl PartialOrd for MaxF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MaxF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Order statistics `min^j rho(mu_pi / n, nu)` for requested ranks `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderStatSeries {
    pub n: u64,
    pub endpoint: LatticePoint,
    pub path_count: u64,
    pub ranks: Vec<u64>,
    /// `values[i]` is the `ranks[i]`-th smallest distance, `+inf` past the
    /// number of paths.
    pub values: Vec<f64>,
}

/// Streams the ensemble through a bounded max-heap that keeps the
/// `max(js)` smallest distances.
pub fn order_stat_series(
    env: &Environment,
    q: &Direction,
    target: &Measure,
    n: u64,
    ranks: &[u64],
    budget: u64,
) -> Result<OrderStatSeries> {
    if ranks.contains(&0) {
        return Err(Error::input("ranks start at 1"));
    }
    let keep = ranks.iter().copied().max().unwrap_or(0) as usize;
    let endpoint = q.floor_scaled(n);
    let enumerator = PathEnumerator::new(env).with_budget(budget);
    let weight = 1.0 / n as f64;
    let mut heap: BinaryHeap<MaxF64> = BinaryHeap::with_capacity(keep.min(1 << 20) + 1);
    let visited = enumerator.for_each_to(&endpoint, |visit| {
        if keep == 0 {
            return;
        }
        let rho = prokhorov_distance(&visit.measure(weight), target);
        if heap.len() < keep {
            heap.push(MaxF64(rho));
        } else if heap.peek().is_some_and(|top| rho < top.0) {
            heap.pop();
            heap.push(MaxF64(rho));
        }
    })?;
    let sorted: Vec<f64> = heap.into_sorted_vec().into_iter().map(|x| x.0).collect();
    let values = ranks
        .iter()
        .map(|&j| sorted.get(j as usize - 1).copied().unwrap_or(f64::INFINITY))
        .collect();
    Ok(OrderStatSeries {
        n,
        endpoint,
        path_count: visited,
        ranks: ranks.to_vec(),
        values,
    })
}

/// Rank `floor(e^{alpha n})`, at least 1.
pub fn rank_for(alpha: f64, n: u64) -> u64 {
    let j = floor(exp(alpha * n as f64));
    if j >= u64::MAX as f64 {
        u64::MAX
    } else {
        (j as u64).max(1)
    }
}

/// `j`-th smallest of an ascending list, `+inf` past its end.
pub fn order_stat(sorted: &[f64], j: u64) -> f64 {
    usize::try_from(j - 1)
        .ok()
        .and_then(|i| sorted.get(i).copied())
        .unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// Ladder behaved as the limit theory predicts (per method).
    pub monotone: bool,
    /// Raw estimate above the deterministic upper bound by more than the band.
    pub exceeds_upper_bound: bool,
    /// Classification near its decision threshold or inconsistent across seeds.
    pub ambiguous: bool,
    /// `(alpha, vanishing)` pairs for the order-statistic method.
    pub alpha_classes: Vec<(f64, bool)>,
    /// `(eps, extrapolated limit)` pairs for the cost-sum method.
    pub eps_limits: Vec<(f64, f64)>,
    /// Difference to a companion estimate, when one was computed.
    pub cross_check: Option<f64>,
}

/// A grid entropy estimate with its ladder data.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyEstimate {
    pub method: Method,
    /// Reported estimate; `-inf` when the target is unreachable.
    pub value: f64,
    /// `(n, raw value)` averaged over seeds.
    pub n_ladder: Vec<(u64, f64)>,
    pub extrapolated: f64,
    /// Half-width of the uncertainty band.
    pub band: f64,
    pub diagnostics: Diagnostics,
}

/// Ensemble and ladder settings shared by the path-ensemble estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    pub dim: usize,
    pub seeds: Vec<u64>,
    pub scales: Vec<u64>,
    pub budget: u64,
}

impl Ladder {
    pub fn new(dim: usize, seeds: Vec<u64>, scales: Vec<u64>) -> Self {
        Self {
            dim,
            seeds,
            scales,
            budget: crate::lattice::DEFAULT_PATH_BUDGET,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() || self.scales.is_empty() {
            return Err(Error::input("ladder needs at least one seed and one scale"));
        }
        if self.scales.contains(&0) {
            return Err(Error::input("scales must be positive"));
        }
        Ok(())
    }
}

/// Per-(seed, n) sorted distance tables over a path ensemble, together
/// with the exact ensemble sizes.
///
/// The normalized log-size `(1/n) log #paths` converges to `limit_rate`
/// (`H(q)`, or `t log D` for the level ensemble) with a deterministic
/// `O(log n / n)` prefactor error. Ladder fits subtract that known offset so
/// that `a + b/n` only has to model the environment-dependent part.
#[derive(Debug, Clone)]
pub struct DistanceTable {
    /// `rows[s][k]` belongs to seed `s` and scale `scales[k]`.
    pub rows: Vec<Vec<Vec<f64>>>,
    pub scales: Vec<u64>,
    /// `ln #paths` at each scale.
    pub log_counts: Vec<f64>,
    pub limit_rate: f64,
}

impl DistanceTable {
    pub fn direction(ladder: &Ladder, q: &Direction, target: &Measure) -> Result<Self> {
        ladder.validate()?;
        if q.dim() != ladder.dim {
            return Err(Error::input("direction dimension does not match the ladder"));
        }
        let mut rows = Vec::with_capacity(ladder.seeds.len());
        for &seed in &ladder.seeds {
            let env = Environment::new(seed, ladder.dim);
            let enumerator = PathEnumerator::new(&env).with_budget(ladder.budget);
            let mut row = Vec::with_capacity(ladder.scales.len());
            for &n in &ladder.scales {
                let mut ds = path_distances(&enumerator, &q.floor_scaled(n), target, n)?;
                ds.sort_by(f64::total_cmp);
                row.push(ds);
            }
            rows.push(row);
        }
        let log_counts = ladder
            .scales
            .iter()
            .map(|&n| ln_big(&path_count(&q.floor_scaled(n))))
            .collect();
        Ok(Self {
            rows,
            scales: ladder.scales.clone(),
            log_counts,
            limit_rate: shannon_entropy(q),
        })
    }

    /// Distances over all paths of length `floor(nt)`.
    pub fn level(ladder: &Ladder, t: Rational, target: &Measure) -> Result<Self> {
        ladder.validate()?;
        let mut rows = Vec::with_capacity(ladder.seeds.len());
        for &seed in &ladder.seeds {
            let env = Environment::new(seed, ladder.dim);
            let enumerator = PathEnumerator::new(&env).with_budget(ladder.budget);
            let mut row = Vec::with_capacity(ladder.scales.len());
            for &n in &ladder.scales {
                let mut ds: Vec<f64> = level_distances(&enumerator, t.floor_times(n), target, n)?
                    .into_iter()
                    .map(|(_, r)| r)
                    .collect();
                ds.sort_by(f64::total_cmp);
                row.push(ds);
            }
            rows.push(row);
        }
        let log_d = ln(ladder.dim as f64);
        let log_counts = ladder
            .scales
            .iter()
            .map(|&n| t.floor_times(n) as f64 * log_d)
            .collect();
        Ok(Self {
            rows,
            scales: ladder.scales.clone(),
            log_counts,
            limit_rate: t.to_f64() * log_d,
        })
    }

    /// Concatenates per-seed tables built on the same scales, in the order
    /// given.
    pub fn merge_seeds(parts: Vec<DistanceTable>) -> Result<Self> {
        let mut iter = parts.into_iter();
        let mut merged = iter.next().ok_or_else(|| Error::input("no tables to merge"))?;
        for part in iter {
            if part.scales != merged.scales || part.limit_rate.to_bits() != merged.limit_rate.to_bits() {
                return Err(Error::input("tables must share scales and ensemble"));
            }
            merged.rows.extend(part.rows);
        }
        Ok(merged)
    }

    fn seeds(&self) -> usize {
        self.rows.len()
    }

    /// `(1/n) log #paths - limit_rate` at ladder position `k`.
    pub fn count_offset(&self, k: usize) -> f64 {
        self.log_counts[k] / self.scales[k] as f64 - self.limit_rate
    }

    /// Subtracts the count offset from a raw ladder before fitting.
    fn corrected(&self, ladder: &[(u64, f64)]) -> Vec<(u64, f64)> {
        ladder
            .iter()
            .enumerate()
            .map(|(k, &(n, v))| (n, v - self.count_offset(k)))
            .collect()
    }
}

/// Vanishing threshold `2 (resolution + 1/n)` for the order statistics at
/// scale `n`, where `resolution` is the Prokhorov error of the target's
/// discretization.
pub fn vanishing_threshold(resolution: f64, n: u64) -> f64 {
    2.0 * (resolution + 1.0 / n as f64)
}

/// Settings for the order-statistic estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderStatsPlan {
    pub alphas: Vec<f64>,
    /// Prokhorov error of the target discretization (`1/(2m)` for `Lambda_m`).
    pub resolution: f64,
}

/// Classifies each `alpha` as vanishing when, for a majority of seeds, the
/// order statistic of rank `floor(e^{alpha n})` is nonincreasing along the
/// ladder and ends below the vanishing threshold. Reports the largest
/// `alpha` of the initial vanishing run (`-inf` if `alpha = 0` does not
/// vanish). This decision rule is a heuristic: the underlying statement is
/// about almost-sure limits, which no finite ladder observes.
///
/// `extrapolated` fits `a + b/n` to `(1/n) log #{pi : rho < threshold(n)}`
/// after removing the count offset.
pub fn estimate_from_order_stats(
    table: &DistanceTable,
    plan: &OrderStatsPlan,
    upper_bound: f64,
) -> EntropyEstimate {
    let seeds = table.seeds();
    let last = table.scales.len() - 1;
    let n_max = table.scales[last];
    let theta_final = vanishing_threshold(plan.resolution, n_max);

    let mut alphas = plan.alphas.clone();
    if !alphas.contains(&0.0) {
        alphas.push(0.0);
    }
    alphas.sort_by(f64::total_cmp);

    let mut classes = Vec::with_capacity(alphas.len());
    let mut ambiguous = false;
    for &alpha in &alphas {
        let mut votes = 0usize;
        for row in &table.rows {
            let seq: Vec<f64> = table
                .scales
                .iter()
                .zip(row)
                .map(|(&n, ds)| order_stat(ds, rank_for(alpha, n)))
                .collect();
            let nonincreasing = seq.windows(2).all(|w| w[1] <= w[0]);
            if nonincreasing && seq[last] < theta_final {
                votes += 1;
            }
        }
        if votes != 0 && votes != seeds {
            ambiguous = true;
        }
        classes.push((alpha, 2 * votes > seeds));
    }
    // the vanishing set is downward closed in the limit: report the end of
    // the initial vanishing run and flag any later stragglers
    let run = classes.iter().take_while(|c| c.1).count();
    let value = if run == 0 {
        f64::NEG_INFINITY
    } else {
        classes[run - 1].0
    };
    if classes[run..].iter().any(|c| c.1) {
        ambiguous = true;
    }

    // count of paths inside the threshold ball, averaged over seeds
    let mut n_ladder = Vec::with_capacity(table.scales.len());
    let mut unreachable = false;
    for (k, &n) in table.scales.iter().enumerate() {
        let theta = vanishing_threshold(plan.resolution, n);
        let mut sum = 0.0;
        for row in &table.rows {
            let inside = row[k].partition_point(|&r| r < theta);
            if inside == 0 {
                unreachable = true;
            }
            sum += ln(inside as f64) / n as f64;
        }
        n_ladder.push((n, sum / seeds as f64));
    }
    let (extrapolated, band) = if unreachable {
        (f64::NEG_INFINITY, 0.0)
    } else {
        let (a, _, resid) = extrapolate_inverse_n(&table.corrected(&n_ladder));
        (a, resid + alpha_spacing(&alphas))
    };

    EntropyEstimate {
        method: Method::OrderStats,
        value,
        n_ladder,
        extrapolated,
        band,
        diagnostics: Diagnostics {
            monotone: true,
            exceeds_upper_bound: value > upper_bound,
            ambiguous,
            alpha_classes: classes,
            eps_limits: Vec::new(),
            cross_check: None,
        },
    }
}

fn alpha_spacing(alphas: &[f64]) -> f64 {
    alphas
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max)
}

/// Cost-sum estimator: for each `eps`, fits `raw(n) - offset(n) = a + b/n`
/// through the seed-averaged ladder and reports `min_eps a(eps)`. The
/// reported `n_ladder` holds the raw (uncorrected) values.
///
/// `eps_ladder` must be decreasing. The band is the largest fit residual
/// plus the change of `a` over the last ladder step.
pub fn estimate_from_cost_sums(
    table: &DistanceTable,
    eps_ladder: &[f64],
    upper_bound: f64,
) -> Result<EntropyEstimate> {
    if eps_ladder.is_empty() {
        return Err(Error::input("eps ladder is empty"));
    }
    if eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::input("eps ladder must be decreasing"));
    }
    for &eps in eps_ladder {
        check_eps(eps)?;
    }
    let seeds = table.seeds() as f64;
    let mut limits = Vec::with_capacity(eps_ladder.len());
    let mut ladders = Vec::with_capacity(eps_ladder.len());
    let mut max_resid = 0.0f64;
    for &eps in eps_ladder {
        let ladder: Vec<(u64, f64)> = table
            .scales
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let mean = table
                    .rows
                    .iter()
                    .map(|row| log_cost_sum(&row[k], n, eps))
                    .sum::<f64>()
                    / seeds;
                (n, mean)
            })
            .collect();
        let (a, _, resid) = extrapolate_inverse_n(&table.corrected(&ladder));
        max_resid = max_resid.max(resid);
        limits.push((eps, a));
        ladders.push(ladder);
    }
    let (best, _) = limits
        .iter()
        .enumerate()
        .min_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
        .map(|(i, l)| (i, l.1))
        .expect("non-empty ladder");
    let gap = if limits.len() >= 2 {
        (limits[limits.len() - 1].1 - limits[limits.len() - 2].1).abs()
    } else {
        0.0
    };
    let band = max_resid + gap;
    let monotone = limits.windows(2).all(|w| w[1].1 <= w[0].1 + band);
    let value = limits[best].1;
    Ok(EntropyEstimate {
        method: Method::EpsSum,
        value,
        n_ladder: ladders.swap_remove(best),
        extrapolated: value,
        band,
        diagnostics: Diagnostics {
            monotone,
            exceeds_upper_bound: value > upper_bound + band,
            ambiguous: false,
            alpha_classes: Vec::new(),
            eps_limits: limits,
            cross_check: None,
        },
    })
}

fn require_mass(q: &Direction, target: &Measure) -> bool {
    (target.total_mass() - q.l1()).abs() <= 1e-9
}

/// Order-statistic estimate of the direction-`q` grid entropy of `target`.
///
/// A target whose mass differs from `|q|_1` is unreachable: every normalized
/// path measure has mass `|q|_1` in the limit, so the estimate is `-inf`.
pub fn estimate_entropy_orderstats(
    ladder: &Ladder,
    q: &Direction,
    target: &Measure,
    plan: &OrderStatsPlan,
) -> Result<EntropyEstimate> {
    let h = shannon_entropy(q);
    if !require_mass(q, target) {
        return Ok(unreachable(Method::OrderStats));
    }
    let table = DistanceTable::direction(ladder, q, target)?;
    Ok(estimate_from_order_stats(&table, plan, h))
}

/// Cost-sum estimate of the direction-`q` grid entropy of `target`.
pub fn estimate_entropy_eps(
    ladder: &Ladder,
    q: &Direction,
    target: &Measure,
    eps_ladder: &[f64],
) -> Result<EntropyEstimate> {
    let table = DistanceTable::direction(ladder, q, target)?;
    estimate_from_cost_sums(&table, eps_ladder, shannon_entropy(q))
}

/// Direction-free cost-sum estimate over paths of length `floor(nt)` with
/// `t = |nu|`. The cross-check field carries the distance to the estimate in
/// the balanced direction `(t/D, ..., t/D)` on the same ladder.
pub fn estimate_entropy_level(
    ladder: &Ladder,
    t: Rational,
    target: &Measure,
    eps_ladder: &[f64],
) -> Result<EntropyEstimate> {
    if (t.to_f64() - target.total_mass()).abs() > 1e-9 {
        return Err(Error::input("level t must equal the target's total mass"));
    }
    let bound = t.to_f64() * ln(ladder.dim as f64);
    if t.num() == 0 {
        // only the empty path, at distance |nu| = 0
        return Ok(EntropyEstimate {
            method: Method::EpsSum,
            value: 0.0,
            n_ladder: ladder.scales.iter().map(|&n| (n, 0.0)).collect(),
            extrapolated: 0.0,
            band: 0.0,
            diagnostics: Diagnostics {
                monotone: true,
                cross_check: Some(0.0),
                ..Diagnostics::default()
            },
        });
    }
    let table = DistanceTable::level(ladder, t, target)?;
    let mut estimate = estimate_from_cost_sums(&table, eps_ladder, bound)?;
    let ell = Direction::balanced(ladder.dim, t)?;
    let directed = estimate_entropy_eps(ladder, &ell, target, eps_ladder)?;
    estimate.diagnostics.cross_check = Some((estimate.value - directed.value).abs());
    Ok(estimate)
}

fn unreachable(method: Method) -> EntropyEstimate {
    EntropyEstimate {
        method,
        value: f64::NEG_INFINITY,
        n_ladder: Vec::new(),
        extrapolated: f64::NEG_INFINITY,
        band: 0.0,
        diagnostics: Diagnostics {
            monotone: true,
            ..Diagnostics::default()
        },
    }
}

/// Default grid `0, 0.05, ..., upper` for the order-statistic estimator.
pub fn alpha_grid(upper: f64, step: f64) -> Vec<f64> {
    let count = floor(upper / step + 1e-9) as usize;
    let mut grid: Vec<f64> = (0..=count).map(|i| i as f64 * step).collect();
    if grid.is_empty() {
        grid = vec![0.0];
    }
    grid
}
