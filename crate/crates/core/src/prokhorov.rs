//! Exact Lévy–Prokhorov distance between finite atomic measures.
//!
//! For a radius `eps`, the largest violation `max_A [mu(A) - nu(A^eps)]` of
//! the defining inequality equals `mu_total - F(eps)`, where `F` is the max
//! flow from the atoms of `mu` to the atoms of `nu` through the pairs closer
//! than `eps`. `F` only changes at pairwise atom distances, so the infimum is
//! found by scanning those breakpoints.

use alloc::vec;
use alloc::vec::Vec;

use crate::measure::Measure;
use crate::{Error, Result};

/// Combined support size accepted by [`prokhorov_brute`].
pub const BRUTE_SUPPORT_LIMIT: usize = 16;

/// Deficiencies below this fraction of the larger total mass are flow
/// rounding noise and are reported as zero.
const SNAP: f64 = 1e-13;

#[inline]
fn snap(deficiency: f64, scale: f64) -> f64 {
    if deficiency <= SNAP * scale {
        0.0
    } else {
        deficiency
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    to: usize,
    cap: f64,
    rev: usize,
}

/// Bipartite transport network: source -> left atoms -> right atoms -> sink.
/// Middle edges have unbounded capacity.
#[derive(Debug, Clone)]
pub struct FlowProblem {
    left: Vec<f64>,
    right: Vec<f64>,
    adjacency: Vec<(usize, usize)>,
}

impl FlowProblem {
    pub fn new(left: Vec<f64>, right: Vec<f64>, adjacency: Vec<(usize, usize)>) -> Self {
        Self {
            left,
            right,
            adjacency,
        }
    }

    /// Network between the atoms of `mu` and `nu` keeping the pairs at
    /// distance `< radius` (`strict`) or `<= radius`.
    pub fn between(mu: &Measure, nu: &Measure, radius: f64, strict: bool) -> Self {
        let xs = mu.atoms();
        let ys = nu.atoms();
        let mut adjacency = Vec::new();
        for (i, x) in xs.iter().enumerate() {
            // nu is sorted, so the admissible atoms form a contiguous run
            let lo = ys.partition_point(|y| {
                let d = x.position - y.position;
                d > 0.0 && !admissible(d, radius, strict)
            });
            for (j, y) in ys.iter().enumerate().skip(lo) {
                let d = (x.position - y.position).abs();
                if admissible(d, radius, strict) {
                    adjacency.push((i, j));
                } else if y.position > x.position {
                    break;
                }
            }
        }
        Self {
            left: xs.iter().map(|a| a.mass).collect(),
            right: ys.iter().map(|a| a.mass).collect(),
            adjacency,
        }
    }

    pub fn left_total(&self) -> f64 {
        self.left.iter().sum()
    }

    pub fn right_total(&self) -> f64 {
        self.right.iter().sum()
    }

    pub fn adjacency(&self) -> &[(usize, usize)] {
        &self.adjacency
    }

    /// Maximum flow. Networks whose left atoms each reach a contiguous run
    /// of right atoms, with both run ends nondecreasing (every network built
    /// by [`FlowProblem::between`]), are solved by a linear greedy fill;
    /// anything else falls back to [`FlowProblem::max_flow_augmenting`].
    pub fn max_flow(&self) -> f64 {
        match self.staircase() {
            Some(runs) => self.greedy_flow(&runs),
            None => self.max_flow_augmenting(),
        }
    }

    /// Per-left-atom runs `[lo, hi]` when the adjacency is a staircase.
    fn staircase(&self) -> Option<Vec<Option<(usize, usize)>>> {
        let mut runs: Vec<Option<(usize, usize)>> = vec![None; self.left.len()];
        let mut counts = vec![0usize; self.left.len()];
        for &(i, j) in &self.adjacency {
            let run = runs.get_mut(i)?;
            *run = Some(match *run {
                None => (j, j),
                Some((lo, hi)) => (lo.min(j), hi.max(j)),
            });
            counts[i] += 1;
        }
        let mut last = (0usize, 0usize);
        for (run, &count) in runs.iter().zip(&counts) {
            if let Some((lo, hi)) = *run {
                if hi >= self.right.len() || count != hi - lo + 1 || lo < last.0 || hi < last.1 {
                    return None;
                }
                last = (lo, hi);
            }
        }
        Some(runs)
    }

    /// Left atoms in order fill the leftmost right atoms with spare
    /// capacity. On a staircase any right atom an earlier left atom could
    /// take instead is also reachable by every later one, so filling left
    /// first never blocks a later augmentation.
    fn greedy_flow(&self, runs: &[Option<(usize, usize)>]) -> f64 {
        let mut spare = self.right.clone();
        let mut first = 0usize;
        let mut flow = 0.0;
        for (&mass, run) in self.left.iter().zip(runs) {
            let Some((lo, hi)) = *run else { continue };
            while first < spare.len() && spare[first] <= 0.0 {
                first += 1;
            }
            let mut need = mass;
            let mut j = lo.max(first);
            while j <= hi && need > 0.0 {
                let take = need.min(spare[j]);
                spare[j] -= take;
                need -= take;
                flow += take;
                j += 1;
            }
        }
        flow
    }

    /// Maximum flow by augmenting paths with capacity scaling: phases look
    /// for paths of residual at least `delta`, halving `delta` each time, and
    /// a last phase accepts any residual above rounding noise.
    pub fn max_flow_augmenting(&self) -> f64 {
        let nl = self.left.len();
        let nr = self.right.len();
        if nl == 0 || nr == 0 || self.adjacency.is_empty() {
            return 0.0;
        }
        let source = nl + nr;
        let sink = source + 1;
        let mut graph: Vec<Vec<Edge>> = vec![Vec::new(); nl + nr + 2];
        let add_edge = |g: &mut Vec<Vec<Edge>>, from: usize, to: usize, cap: f64| {
            let rev_from = g[to].len();
            let rev_to = g[from].len();
            g[from].push(Edge {
                to,
                cap,
                rev: rev_from,
            });
            g[to].push(Edge {
                to: from,
                cap: 0.0,
                rev: rev_to,
            });
        };
        for (i, &a) in self.left.iter().enumerate() {
            add_edge(&mut graph, source, i, a);
        }
        for (j, &b) in self.right.iter().enumerate() {
            add_edge(&mut graph, nl + j, sink, b);
        }
        for &(i, j) in &self.adjacency {
            add_edge(&mut graph, i, nl + j, f64::INFINITY);
        }

        let max_cap = self
            .left
            .iter()
            .chain(self.right.iter())
            .fold(0.0f64, |m, &c| m.max(c));
        let floor = max_cap * 1e-15;
        let mut delta = 1.0f64;
        while delta <= max_cap {
            delta *= 2.0;
        }
        while delta > max_cap {
            delta *= 0.5;
        }

        let mut flow = 0.0;
        let mut parent: Vec<(usize, usize)> = vec![(usize::MAX, 0); graph.len()];
        let mut queue: Vec<usize> = Vec::with_capacity(graph.len());
        loop {
            let threshold = delta.max(floor);
            // breadth-first search over edges with residual >= threshold
            loop {
                parent.iter_mut().for_each(|p| *p = (usize::MAX, 0));
                parent[source] = (source, 0);
                queue.clear();
                queue.push(source);
                let mut head = 0;
                while head < queue.len() && parent[sink].0 == usize::MAX {
                    let u = queue[head];
                    head += 1;
                    for (k, e) in graph[u].iter().enumerate() {
                        if e.cap >= threshold && e.cap > floor && parent[e.to].0 == usize::MAX {
                            parent[e.to] = (u, k);
                            queue.push(e.to);
                        }
                    }
                }
                if parent[sink].0 == usize::MAX {
                    break;
                }
                let mut bottleneck = f64::INFINITY;
                let mut v = sink;
                while v != source {
                    let (u, k) = parent[v];
                    bottleneck = bottleneck.min(graph[u][k].cap);
                    v = u;
                }
                let mut v = sink;
                while v != source {
                    let (u, k) = parent[v];
                    let rev = graph[u][k].rev;
                    graph[u][k].cap -= bottleneck;
                    graph[v][rev].cap += bottleneck;
                    v = u;
                }
                flow += bottleneck;
            }
            if threshold <= floor {
                break;
            }
            delta *= 0.5;
            if delta < floor {
                delta = 0.0;
            }
        }
        flow
    }
}

#[inline]
fn admissible(d: f64, radius: f64, strict: bool) -> bool {
    if strict {
        d < radius
    } else {
        d <= radius
    }
}

/// `max_A [mu(A) - nu(A^radius)]` over Borel sets `A`, via max flow.
///
/// `strict = true` uses the open neighbourhood (`d < radius`); `false` the
/// closed one, which is the limit from above.
pub fn max_deficiency(mu: &Measure, nu: &Measure, radius: f64, strict: bool) -> f64 {
    let flow = FlowProblem::between(mu, nu, radius, strict).max_flow();
    snap(mu.total_mass() - flow, mu.total_mass().max(nu.total_mass()))
}

/// Sorted distinct pairwise atom distances, always starting with `0`.
fn breakpoints(mu: &Measure, nu: &Measure) -> Vec<f64> {
    let mut ds = Vec::with_capacity(mu.len() * nu.len() + 1);
    ds.push(0.0);
    for x in mu.atoms() {
        for y in nu.atoms() {
            ds.push((x.position - y.position).abs());
        }
    }
    ds.sort_by(f64::total_cmp);
    ds.dedup();
    ds
}

/// Exact Lévy–Prokhorov distance between two finite atomic measures.
///
/// On the radius interval `(d_k, d_{k+1}]` the open neighbourhoods admit
/// exactly the pairs at distance `<= d_k`, so the predicate there reads
/// `eps >= g_k := max(|mu|, |nu|) - F_closed(d_k)` and the interval
/// contributes `max(d_k, g_k)`. `g_k` is nonincreasing and `d_k` increasing,
/// so the minimum sits at their crossing and is located by bisection on the
/// breakpoint index; every probe is an exact flow solve.
pub fn prokhorov_distance(mu: &Measure, nu: &Measure) -> f64 {
    prokhorov_distance_with(mu, nu, FlowProblem::max_flow)
}

/// [`prokhorov_distance`] with a caller-supplied max-flow solver.
pub fn prokhorov_distance_with<F>(mu: &Measure, nu: &Measure, solve: F) -> f64
where
    F: Fn(&FlowProblem) -> f64,
{
    if mu.is_empty() || nu.is_empty() {
        return mu.total_mass().max(nu.total_mass());
    }
    let ds = breakpoints(mu, nu);
    let top = mu.total_mass().max(nu.total_mass());
    let mut cache: Vec<Option<f64>> = vec![None; ds.len()];
    let mut deficiency = |k: usize| -> f64 {
        if let Some(g) = cache[k] {
            return g;
        }
        let g = snap(top - solve(&FlowProblem::between(mu, nu, ds[k], false)), top);
        cache[k] = Some(g);
        g
    };

    let last = ds.len() - 1;
    if deficiency(last) > ds[last] {
        return deficiency(last);
    }
    // smallest k with g_k <= d_k
    let (mut lo, mut hi) = (0usize, last);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if deficiency(mid) <= ds[mid] {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    if lo == 0 {
        ds[0]
    } else {
        deficiency(lo - 1).min(ds[lo])
    }
}

/// Reference oracle: for every radius interval, scans all subsets of each
/// support against open neighbourhoods taken at an interior radius.
pub fn prokhorov_brute(mu: &Measure, nu: &Measure) -> Result<f64> {
    let size = mu.len() + nu.len();
    if size > BRUTE_SUPPORT_LIMIT {
        return Err(Error::SupportTooLarge {
            size,
            limit: BRUTE_SUPPORT_LIMIT,
        });
    }
    let xs: Vec<(f64, f64)> = mu.atoms().iter().map(|a| (a.position, a.mass)).collect();
    let ys: Vec<(f64, f64)> = nu.atoms().iter().map(|a| (a.position, a.mass)).collect();

    let mut radii: Vec<f64> = vec![0.0];
    for x in &xs {
        for y in &ys {
            radii.push((x.0 - y.0).abs());
        }
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();

    // worst violation of `a(A) <= b(A^eps) + eps` over subsets A of a's support
    let worst = |a: &[(f64, f64)], b: &[(f64, f64)], eps: f64| -> f64 {
        let reach: Vec<u32> = a
            .iter()
            .map(|x| {
                b.iter()
                    .enumerate()
                    .filter(|(_, y)| (x.0 - y.0).abs() < eps)
                    .fold(0u32, |m, (j, _)| m | (1 << j))
            })
            .collect();
        let mut best = 0.0f64;
        for mask in 0u32..(1u32 << a.len()) {
            let mut mass = 0.0;
            let mut hood = 0u32;
            for (i, x) in a.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    mass += x.1;
                    hood |= reach[i];
                }
            }
            let covered: f64 = b
                .iter()
                .enumerate()
                .filter(|(j, _)| hood & (1 << j) != 0)
                .map(|(_, y)| y.1)
                .sum();
            best = best.max(mass - covered);
        }
        best
    };

    let top = mu.total_mass().max(nu.total_mass());
    let mut answer = f64::INFINITY;
    for k in 0..radii.len() {
        let lo = radii[k];
        let hi = radii.get(k + 1).copied();
        let probe = match hi {
            Some(h) => 0.5 * (lo + h),
            None => lo + 1.0,
        };
        let g = snap(worst(&xs, &ys, probe).max(worst(&ys, &xs, probe)), top);
        let candidate = lo.max(g);
        if hi.is_none_or(|h| candidate <= h) {
            answer = answer.min(candidate);
        }
    }
    Ok(answer)
}
