//! Directed polymers: partition functions, last passage times and polymer
//! path sampling by transfer-matrix recursions in log space.

use alloc::vec;
use alloc::vec::Vec;

use crate::environment::{CounterRng, Environment};
use crate::lattice::{Direction, LatticePoint, Path};
use crate::math::{binomial_u64, extrapolate_inverse_n, sqrt, LogSumExp};
use crate::measure::{Histogram, Measure};
use crate::prokhorov::prokhorov_distance;
use crate::tau::TauFn;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DpMode {
    /// `log Z` with inverse temperature `beta`.
    Softmax { beta: f64 },
    /// Last passage times (the zero-temperature limit).
    MaxPlus,
}

impl DpMode {
    #[inline]
    fn combine(&self, acc: &mut Reducer, value: f64, weight: f64, step: usize) {
        match (*self, acc) {
            (DpMode::Softmax { beta }, Reducer::Sum(lse)) => lse.push(value + beta * weight),
            (DpMode::MaxPlus, Reducer::Max(best, arg)) => {
                let v = value + weight;
                if v > *best {
                    *best = v;
                    *arg = step as u8;
                }
            }
            _ => unreachable!("reducer matches mode"),
        }
    }

    fn reducer(&self) -> Reducer {
        match self {
            DpMode::Softmax { .. } => Reducer::Sum(LogSumExp::new()),
            DpMode::MaxPlus => Reducer::Max(f64::NEG_INFINITY, u8::MAX),
        }
    }
}

enum Reducer {
    Sum(LogSumExp),
    Max(f64, u8),
}

impl Reducer {
    fn value(&self) -> f64 {
        match self {
            Reducer::Sum(lse) => lse.value(),
            Reducer::Max(v, _) => *v,
        }
    }

    fn arg(&self) -> u8 {
        match self {
            Reducer::Max(_, a) => *a,
            Reducer::Sum(_) => u8::MAX,
        }
    }
}

fn strides(extent: &[u32]) -> Vec<usize> {
    let mut s = vec![1usize; extent.len()];
    for i in (0..extent.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * (extent[i + 1] as usize + 1);
    }
    s
}

fn advance(coords: &mut [u32], extent: &[u32]) {
    for i in (0..coords.len()).rev() {
        if coords[i] < extent[i] {
            coords[i] += 1;
            return;
        }
        coords[i] = 0;
    }
}

/// `log sum_{pi: 0 -> endpoint} exp(beta T(pi))`, sweeping the box in
/// row-major order with a ring buffer of one hyperplane slab.
pub fn log_partition_point(env: &Environment, endpoint: &LatticePoint, beta: f64, tau: &TauFn) -> f64 {
    let extent = endpoint.coords();
    let st = strides(extent);
    let cells: usize = extent.iter().map(|&e| e as usize + 1).product();
    let ring = st[0] + 1;
    let mut buf = vec![0.0f64; ring];
    let mut coords = vec![0u32; extent.len()];
    let mut anchor = vec![0u32; extent.len()];
    let mut last = 0.0;
    for idx in 0..cells {
        let v = if idx == 0 {
            0.0
        } else {
            let mut lse = LogSumExp::new();
            for i in 0..extent.len() {
                if coords[i] > 0 {
                    anchor.copy_from_slice(&coords);
                    anchor[i] -= 1;
                    let w = tau.eval(env.edge_label(&anchor, i));
                    lse.push(buf[(idx - st[i]) % ring] + beta * w);
                }
            }
            lse.value()
        };
        buf[idx % ring] = v;
        last = v;
        advance(&mut coords, extent);
    }
    last
}

/// Full point-to-point table over the box `[0, endpoint]`.
#[derive(Debug, Clone)]
pub struct DpTable {
    env: Environment,
    tau: TauFn,
    mode: DpMode,
    extent: Vec<u32>,
    strides: Vec<usize>,
    values: Vec<f64>,
    argmax: Vec<u8>,
}

impl DpTable {
    pub fn point_to_point(env: &Environment, endpoint: &LatticePoint, tau: &TauFn, mode: DpMode) -> Self {
        let extent = endpoint.coords().to_vec();
        let st = strides(&extent);
        let cells: usize = extent.iter().map(|&e| e as usize + 1).product();
        let mut values = vec![0.0f64; cells];
        let mut argmax = if matches!(mode, DpMode::MaxPlus) {
            vec![u8::MAX; cells]
        } else {
            Vec::new()
        };
        let mut coords = vec![0u32; extent.len()];
        let mut anchor = vec![0u32; extent.len()];
        for idx in 0..cells {
            if idx > 0 {
                let mut acc = mode.reducer();
                for i in 0..extent.len() {
                    if coords[i] > 0 {
                        anchor.copy_from_slice(&coords);
                        anchor[i] -= 1;
                        let w = tau.eval(env.edge_label(&anchor, i));
                        mode.combine(&mut acc, values[idx - st[i]], w, i);
                    }
                }
                values[idx] = acc.value();
                if !argmax.is_empty() {
                    argmax[idx] = acc.arg();
                }
            }
            advance(&mut coords, &extent);
        }
        Self {
            env: *env,
            tau: tau.clone(),
            mode,
            extent,
            strides: st,
            values,
            argmax,
        }
    }

    pub fn mode(&self) -> DpMode {
        self.mode
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    pub fn tau(&self) -> &TauFn {
        &self.tau
    }

    pub fn extent(&self) -> &[u32] {
        &self.extent
    }

    /// Row-major values over the box.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn index(&self, point: &[u32]) -> usize {
        point.iter().zip(&self.strides).map(|(&c, &s)| c as usize * s).sum()
    }

    pub fn value_at(&self, point: &LatticePoint) -> Option<f64> {
        if point.dim() != self.extent.len() || point.coords().iter().zip(&self.extent).any(|(c, e)| c > e) {
            return None;
        }
        Some(self.values[self.index(point.coords())])
    }

    /// Value at the far corner of the box.
    pub fn corner_value(&self) -> f64 {
        *self.values.last().expect("box has at least one cell")
    }

    /// Draws a path from the polymer measure: walking back from the corner,
    /// the predecessor `u` of `v` is chosen with probability
    /// `exp(logZ(u) + beta tau(U_uv) - logZ(v))`.
    pub fn sample_path(&self, rng: &mut CounterRng) -> Path {
        let beta = match self.mode {
            DpMode::Softmax { beta } => beta,
            DpMode::MaxPlus => return self.argmax_path(),
        };
        let mut cur = self.extent.clone();
        let mut steps = Vec::with_capacity(cur.iter().map(|&c| c as usize).sum());
        let mut anchor = cur.clone();
        while cur.iter().any(|&c| c > 0) {
            let here = self.values[self.index(&cur)];
            let mut u = rng.next_f64();
            let mut chosen = None;
            let mut fallback = 0;
            for i in 0..cur.len() {
                if cur[i] == 0 {
                    continue;
                }
                fallback = i;
                anchor.copy_from_slice(&cur);
                anchor[i] -= 1;
                let w = self.tau.eval(self.env.edge_label(&anchor, i));
                let p = crate::math::exp(self.values[self.index(&anchor)] + beta * w - here);
                if u < p {
                    chosen = Some(i);
                    break;
                }
                u -= p;
            }
            // rounding can leave u marginally above the last mass
            let i = chosen.unwrap_or(fallback);
            cur[i] -= 1;
            steps.push(i);
        }
        steps.reverse();
        Path::new(LatticePoint::origin(self.extent.len()), steps)
    }

    /// Maximizing path by back-pointers (max-plus tables only).
    pub fn argmax_path(&self) -> Path {
        assert!(!self.argmax.is_empty(), "argmax needs a max-plus table");
        let mut cur = self.extent.clone();
        let mut steps = Vec::new();
        while cur.iter().any(|&c| c > 0) {
            let i = self.argmax[self.index(&cur)] as usize;
            cur[i] -= 1;
            steps.push(i);
        }
        steps.reverse();
        Path::new(LatticePoint::origin(self.extent.len()), steps)
    }
}

/// Last passage time `max_pi T(pi)` to `endpoint` with a maximizing path.
pub fn last_passage(env: &Environment, endpoint: &LatticePoint, tau: &TauFn) -> (f64, Path) {
    let table = DpTable::point_to_point(env, endpoint, tau, DpMode::MaxPlus);
    (table.corner_value(), table.argmax_path())
}

/// Points of `Z^D_{>=0}` with coordinate sum `k`, ranked lexicographically.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Simplex {
    pub(crate) dim: usize,
}

impl Simplex {
    pub(crate) fn size(&self, k: u32) -> usize {
        binomial_u64(u64::from(k) + self.dim as u64 - 1, self.dim as u64 - 1) as usize
    }

    pub(crate) fn rank(&self, x: &[u32], k: u32) -> usize {
        let mut r = u64::from(k);
        let mut rank = 0u64;
        for (i, &xi) in x.iter().enumerate().take(self.dim - 1) {
            let p = (self.dim - 1 - i) as u64;
            let xi = u64::from(xi);
            rank += binomial_u64(r + p, p) - binomial_u64(r - xi + p, p);
            r -= xi;
        }
        rank as usize
    }

    pub(crate) fn for_each(&self, k: u32, mut f: impl FnMut(usize, &[u32])) {
        let mut x = vec![0u32; self.dim];
        let mut idx = 0usize;
        fn fill(x: &mut [u32], pos: usize, left: u32, idx: &mut usize, f: &mut dyn FnMut(usize, &[u32])) {
            if pos == x.len() - 1 {
                x[pos] = left;
                f(*idx, x);
                *idx += 1;
                return;
            }
            for v in 0..=left {
                x[pos] = v;
                fill(x, pos + 1, left - v, idx, f);
            }
        }
        fill(&mut x, 0, k, &mut idx, &mut f);
    }
}

/// Point-to-level table: `log Z` at every point of levels `0..=n`.
#[derive(Debug, Clone)]
pub struct LevelTable {
    env: Environment,
    tau: TauFn,
    beta: f64,
    levels: Vec<Vec<f64>>,
}

impl LevelTable {
    pub fn build(env: &Environment, n: u32, beta: f64, tau: &TauFn) -> Self {
        let simplex = Simplex { dim: env.dim() };
        let mut levels: Vec<Vec<f64>> = Vec::with_capacity(n as usize + 1);
        levels.push(vec![0.0]);
        let mut anchor = vec![0u32; env.dim()];
        for k in 1..=n {
            let prev = &levels[k as usize - 1];
            let mut cur = vec![0.0f64; simplex.size(k)];
            simplex.for_each(k, |idx, x| {
                let mut lse = LogSumExp::new();
                for i in 0..x.len() {
                    if x[i] > 0 {
                        anchor.copy_from_slice(x);
                        anchor[i] -= 1;
                        let w = tau.eval(env.edge_label(&anchor, i));
                        lse.push(prev[simplex.rank(&anchor, k - 1)] + beta * w);
                    }
                }
                cur[idx] = lse.value();
            });
            levels.push(cur);
        }
        Self {
            env: *env,
            tau: tau.clone(),
            beta,
            levels,
        }
    }

    pub fn length(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    /// `log Z` at a point of level `|point|_1 <= n`.
    pub fn value_at(&self, point: &LatticePoint) -> Option<f64> {
        let k = point.l1();
        if k > u64::from(self.length()) || point.dim() != self.env.dim() {
            return None;
        }
        let simplex = Simplex { dim: self.env.dim() };
        Some(self.levels[k as usize][simplex.rank(point.coords(), k as u32)])
    }

    /// `log` of the point-to-level partition function at level `n`.
    pub fn log_partition(&self) -> f64 {
        crate::math::log_sum_exp(self.levels.last().expect("level 0 exists").iter().copied())
    }

    /// Endpoint drawn with probability `Z(x) / Z_level`, then backward
    /// sampling as in [`DpTable::sample_path`].
    pub fn sample_path(&self, rng: &mut CounterRng) -> Path {
        let dim = self.env.dim();
        let simplex = Simplex { dim };
        let n = self.length();
        let total = self.log_partition();
        let mut u = rng.next_f64();
        let mut end: Option<Vec<u32>> = None;
        let mut fallback = vec![0u32; dim];
        simplex.for_each(n, |idx, x| {
            if end.is_some() {
                return;
            }
            let p = crate::math::exp(self.levels[n as usize][idx] - total);
            fallback.copy_from_slice(x);
            if u < p {
                end = Some(x.to_vec());
            } else {
                u -= p;
            }
        });
        let mut cur = end.unwrap_or(fallback);
        let mut anchor = cur.clone();
        let mut steps = Vec::with_capacity(n as usize);
        for k in (1..=n).rev() {
            let here = self.levels[k as usize][simplex.rank(&cur, k)];
            let mut u = rng.next_f64();
            let mut chosen = None;
            let mut fallback = 0;
            for i in 0..dim {
                if cur[i] == 0 {
                    continue;
                }
                fallback = i;
                anchor.copy_from_slice(&cur);
                anchor[i] -= 1;
                let w = self.tau.eval(self.env.edge_label(&anchor, i));
                let prev = self.levels[k as usize - 1][simplex.rank(&anchor, k - 1)];
                let p = crate::math::exp(prev + self.beta * w - here);
                if u < p {
                    chosen = Some(i);
                    break;
                }
                u -= p;
            }
            let i = chosen.unwrap_or(fallback);
            cur[i] -= 1;
            steps.push(i);
        }
        steps.reverse();
        Path::new(LatticePoint::origin(dim), steps)
    }
}

/// `log sum` over all `D^n` paths of length `n` of `exp(beta T(pi))`.
pub fn log_partition_level(env: &Environment, n: u32, beta: f64, tau: &TauFn) -> f64 {
    let simplex = Simplex { dim: env.dim() };
    let mut prev = vec![0.0f64];
    let mut anchor = vec![0u32; env.dim()];
    for k in 1..=n {
        let mut cur = vec![0.0f64; simplex.size(k)];
        simplex.for_each(k, |idx, x| {
            let mut lse = LogSumExp::new();
            for i in 0..x.len() {
                if x[i] > 0 {
                    anchor.copy_from_slice(x);
                    anchor[i] -= 1;
                    let w = tau.eval(env.edge_label(&anchor, i));
                    lse.push(prev[simplex.rank(&anchor, k - 1)] + beta * w);
                }
            }
            cur[idx] = lse.value();
        });
        prev = cur;
    }
    crate::math::log_sum_exp(prev)
}

/// Which path ensemble a free-energy estimate runs over.
#[derive(Debug, Clone, PartialEq)]
pub enum Ensemble {
    /// Paths `0 -> floor(nq)`.
    Direction(Direction),
    /// All paths of length `n`.
    Level,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsEstimate {
    pub value: f64,
    /// Spread of the per-seed extrapolations plus the largest fit residual.
    pub band: f64,
    /// `(n, mean over seeds of (1/n) log Z)`.
    pub n_ladder: Vec<(u64, f64)>,
    pub per_seed: Vec<f64>,
}

/// `(1/n) log Z_n` for one environment at one scale.
pub fn free_energy_at(env: &Environment, ensemble: &Ensemble, n: u64, beta: f64, tau: &TauFn) -> f64 {
    let log_z = match ensemble {
        Ensemble::Direction(q) => log_partition_point(env, &q.floor_scaled(n), beta, tau),
        Ensemble::Level => log_partition_level(env, n as u32, beta, tau),
    };
    log_z / n as f64
}

/// Free energy limit: per seed, `(1/n) log Z` along the ladder is
/// extrapolated with `a + b/n`; the seeds are averaged.
pub fn gibbs_estimate(
    ensemble: &Ensemble,
    dim: usize,
    beta: f64,
    tau: &TauFn,
    scales: &[u64],
    seeds: &[u64],
) -> Result<GibbsEstimate> {
    if scales.is_empty() || seeds.is_empty() {
        return Err(Error::input("gibbs estimate needs scales and seeds"));
    }
    if let Ensemble::Direction(q) = ensemble {
        if q.dim() != dim {
            return Err(Error::input("direction dimension mismatch"));
        }
    }
    let ladders: Vec<Vec<(u64, f64)>> = seeds
        .iter()
        .map(|&seed| {
            let env = Environment::new(seed, dim);
            scales
                .iter()
                .map(|&n| (n, free_energy_at(&env, ensemble, n, beta, tau)))
                .collect()
        })
        .collect();
    gibbs_from_ladders(&ladders)
}

/// Combines per-seed `(n, (1/n) log Z)` ladders (all on the same scales)
/// into a [`GibbsEstimate`]. The band is two standard errors of the
/// per-seed limits plus the largest fit residual.
pub fn gibbs_from_ladders(ladders: &[Vec<(u64, f64)>]) -> Result<GibbsEstimate> {
    let first = ladders.first().ok_or_else(|| Error::input("no ladders to combine"))?;
    if first.is_empty() || ladders.iter().any(|l| l.len() != first.len()) {
        return Err(Error::input("ladders must share their scales"));
    }
    let seeds = ladders.len() as f64;
    let mut mean_ladder: Vec<(u64, f64)> = first.iter().map(|&(n, _)| (n, 0.0)).collect();
    let mut per_seed = Vec::with_capacity(ladders.len());
    let mut max_resid = 0.0f64;
    for ladder in ladders {
        for (m, p) in mean_ladder.iter_mut().zip(ladder) {
            if m.0 != p.0 {
                return Err(Error::input("ladders must share their scales"));
            }
            m.1 += p.1 / seeds;
        }
        let (a, _, resid) = extrapolate_inverse_n(ladder);
        max_resid = max_resid.max(resid);
        per_seed.push(a);
    }
    let value = per_seed.iter().sum::<f64>() / seeds;
    let spread = if per_seed.len() > 1 {
        let var = per_seed.iter().map(|a| (a - value) * (a - value)).sum::<f64>() / (seeds - 1.0);
        2.0 * sqrt(var / seeds)
    } else {
        0.0
    };
    Ok(GibbsEstimate {
        value,
        band: spread + max_resid,
        n_ladder: mean_ladder,
        per_seed,
    })
}

/// One rung of the empirical-measure convergence diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: u64,
    /// Mean normalized empirical measure of the sampled paths, binned.
    pub mean_measure: Histogram,
    /// `rho` to the next rung's mean measure (`None` on the last rung).
    pub to_next: Option<f64>,
    /// `rho` to each candidate measure, in the order given.
    pub to_candidates: Vec<f64>,
}

/// Samples polymer paths at each scale of a ladder in one environment and
/// tracks how the mean normalized empirical measure settles. Reports
/// distances only; no pass/fail.
///
/// Mean measures are binned onto `bins` equal cells before distances are
/// taken, which costs at most `1/(2 bins)` in Prokhorov distance.
#[allow(clippy::too_many_arguments)]
pub fn empirical_convergence_diagnostic(
    env: &Environment,
    q: &Direction,
    beta: f64,
    tau: &TauFn,
    scales: &[u64],
    samples: usize,
    sampler_seed: u64,
    bins: usize,
    candidates: &[Measure],
) -> Result<Vec<ConvergenceRow>> {
    if bins == 0 || samples == 0 {
        return Err(Error::input("diagnostic needs bins and samples"));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(scales.len());
    let mut binned: Vec<Measure> = Vec::with_capacity(scales.len());
    for &n in scales {
        let table = DpTable::point_to_point(env, &q.floor_scaled(n), tau, DpMode::Softmax { beta });
        let mut masses = vec![0.0f64; bins];
        let weight = 1.0 / (n as f64 * samples as f64);
        for s in 0..samples {
            let mut rng = CounterRng::new(sampler_seed, n.wrapping_mul(1_000_003).wrapping_add(s as u64));
            let path = table.sample_path(&mut rng);
            for u in path.labels(env) {
                let b = ((u * bins as f64) as usize).min(bins - 1);
                masses[b] += weight;
            }
        }
        let hist = Histogram::new(masses)?;
        let atoms = hist.to_measure();
        let to_candidates = candidates.iter().map(|c| prokhorov_distance(&atoms, c)).collect();
        binned.push(atoms);
        rows.push(ConvergenceRow {
            n,
            mean_measure: hist,
            to_next: None,
            to_candidates,
        });
    }
    for k in 0..rows.len().saturating_sub(1) {
        rows[k].to_next = Some(prokhorov_distance(&binned[k], &binned[k + 1]));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{path_count, path_weight, PathEnumerator};
    use crate::math::{exp, ln, ln_big};

    fn lp(c: &[u32]) -> LatticePoint {
        LatticePoint::new(c.to_vec())
    }

    fn enumerated_log_sum(env: &Environment, end: &LatticePoint, beta: f64, tau: &TauFn) -> f64 {
        let mut acc = LogSumExp::new();
        PathEnumerator::new(env)
            .for_each_to(end, |v| acc.push(beta * path_weight(env, tau, &v.to_path())))
            .unwrap();
        acc.value()
    }

    #[test]
    fn zero_tau_counts_paths() {
        let env = Environment::new(1, 3);
        let end = lp(&[3, 2, 4]);
        let v = log_partition_point(&env, &end, 1.7, &TauFn::zero());
        assert!((v - ln_big(&path_count(&end))).abs() < 1e-12);
    }

    #[test]
    fn single_edge() {
        let env = Environment::new(4, 3);
        let tau = TauFn::identity_ladder(16).unwrap();
        let v = log_partition_point(&env, &lp(&[1, 0, 0]), 2.0, &tau);
        let expect = 2.0 * tau.eval(env.edge_label(&[0, 0, 0], 0));
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn point_matches_enumeration() {
        let env = Environment::new(11, 2);
        let tau = TauFn::identity_ladder(16).unwrap();
        let end = lp(&[4, 4]);
        let v = log_partition_point(&env, &end, 1.0, &tau);
        let e = enumerated_log_sum(&env, &end, 1.0, &tau);
        assert!(((v - e) / e).abs() < 1e-10);
        let table = DpTable::point_to_point(&env, &end, &tau, DpMode::Softmax { beta: 1.0 });
        assert_eq!(table.corner_value(), v);
    }

    #[test]
    fn level_examples() {
        let env = Environment::new(3, 2);
        assert!((log_partition_level(&env, 9, 1.0, &TauFn::zero()) - 9.0 * ln(2.0)).abs() < 1e-12);
        let c = 0.3;
        let v = log_partition_level(&env, 7, 2.0, &TauFn::constant(c));
        assert!((v - 7.0 * (2.0 * c + ln(2.0))).abs() < 1e-12);

        let tau = TauFn::identity_ladder(8).unwrap();
        let mut acc = LogSumExp::new();
        PathEnumerator::new(&env)
            .for_each_of_length(6, |v| acc.push(path_weight(&env, &tau, &v.to_path())))
            .unwrap();
        let dp = log_partition_level(&env, 6, 1.0, &tau);
        assert!(((dp - acc.value()) / dp).abs() < 1e-10);
    }

    #[test]
    fn level_is_sum_over_endpoints() {
        let env = Environment::new(8, 3);
        let tau = TauFn::uniform_cells(vec![-1.0, 0.5, 2.0]).unwrap();
        let n = 5;
        let level = log_partition_level(&env, n, 0.7, &tau);
        let mut acc = LogSumExp::new();
        Simplex { dim: 3 }.for_each(n, |_, x| {
            acc.push(log_partition_point(&env, &lp(x), 0.7, &tau));
        });
        assert!(((level - acc.value()) / level).abs() < 1e-10);
        let table = LevelTable::build(&env, n, 0.7, &tau);
        assert!(((table.log_partition() - level) / level).abs() < 1e-12);
        assert_eq!(
            table.value_at(&lp(&[2, 1, 2])),
            Some(log_partition_point(&env, &lp(&[2, 1, 2]), 0.7, &tau))
        );
    }

    #[test]
    fn simplex_rank_is_enumeration_order() {
        for dim in 1..=4 {
            let s = Simplex { dim };
            for k in 0..6 {
                let mut count = 0;
                s.for_each(k, |idx, x| {
                    assert_eq!(s.rank(x, k), idx);
                    count += 1;
                });
                assert_eq!(count, s.size(k));
            }
        }
    }

    #[test]
    fn last_passage_examples() {
        let env = Environment::new(9, 2);
        let (v, path) = last_passage(&env, &lp(&[5, 5]), &TauFn::constant(0.25));
        assert!((v - 2.5).abs() < 1e-15);
        assert_eq!(path.len(), 10);

        let tau = TauFn::identity_ladder(16).unwrap();
        let (v, path) = last_passage(&env, &lp(&[5, 5]), &tau);
        let mut best = f64::NEG_INFINITY;
        PathEnumerator::new(&env)
            .for_each_to(&lp(&[5, 5]), |p| best = best.max(path_weight(&env, &tau, &p.to_path())))
            .unwrap();
        assert!((v - best).abs() < 1e-12);
        assert!((path_weight(&env, &tau, &path) - v).abs() < 1e-12);

        let (v, path) = last_passage(&env, &lp(&[0, 4]), &tau);
        assert_eq!(path.steps, vec![1, 1, 1, 1]);
        assert!((path_weight(&env, &tau, &path) - v).abs() < 1e-15);
    }

    #[test]
    fn sampler_returns_valid_paths() {
        let env = Environment::new(5, 3);
        let tau = TauFn::identity_ladder(4).unwrap();
        let table = DpTable::point_to_point(&env, &lp(&[2, 3, 1]), &tau, DpMode::Softmax { beta: 1.0 });
        let mut rng = CounterRng::new(1, 0);
        for _ in 0..50 {
            let p = table.sample_path(&mut rng);
            assert_eq!(p.end(), lp(&[2, 3, 1]));
        }
        let level = LevelTable::build(&env, 6, 1.0, &tau);
        for _ in 0..50 {
            assert_eq!(level.sample_path(&mut rng).len(), 6);
        }
    }

    #[test]
    fn beta_zero_sampling_is_uniform_in_expectation() {
        // exact law check: each of the 6 paths of (2,2) has probability 1/6
        let env = Environment::new(2, 2);
        let table = DpTable::point_to_point(&env, &lp(&[2, 2]), &TauFn::identity_ladder(8).unwrap(), DpMode::Softmax { beta: 0.0 });
        assert!((exp(table.corner_value()) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn gibbs_zero_tau_is_count_rate() {
        let q: Direction = "1/2,1/2".parse().unwrap();
        let g = gibbs_estimate(&Ensemble::Direction(q), 2, 1.0, &TauFn::zero(), &[64, 128, 256, 512], &[1]).unwrap();
        assert!((g.value - core::f64::consts::LN_2).abs() < 0.02);
        let g = gibbs_estimate(&Ensemble::Level, 2, 1.0, &TauFn::zero(), &[16, 32], &[1, 2]).unwrap();
        assert!((g.value - core::f64::consts::LN_2).abs() < 1e-12);
    }
}
