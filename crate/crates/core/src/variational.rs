//! Convex duality between grid entropy and free energy: the variational
//! formula over candidate measures, the conjugate entropy search over step
//! functions, the KL budget and the Bernoulli exponent count.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::environment::{CounterRng, Environment};
use crate::estimators::{Diagnostics, EntropyEstimate, Method};
use crate::lattice::{shannon_entropy, Direction};
use crate::math::{exp, ln, xlogx};
use crate::measure::{Histogram, Measure};
use crate::polymer::{gibbs_estimate, Ensemble, GibbsEstimate, Simplex};
use crate::tau::TauFn;
use crate::{Error, Result};

/// `<tau, nu> = sum mass * tau(position)` over the atoms of `nu`.
pub fn integral(tau: &TauFn, nu: &Measure) -> f64 {
    nu.atoms().iter().map(|a| a.mass * tau.eval(a.position)).sum()
}

/// How a candidate family was generated.
#[derive(Debug, Clone, PartialEq)]
pub enum Recipe {
    /// Histograms whose bin masses are multiples of `1/levels`.
    HistogramGrid { bins: usize, levels: usize },
    /// Densities proportional to `exp(theta u)`.
    ExponentialTilt { bins: usize },
    /// Convex combinations of two measures.
    MixtureSweep { steps: usize },
    Custom(String),
}

impl Recipe {
    pub fn id(&self) -> String {
        match self {
            Recipe::HistogramGrid { bins, levels } => format!("grid-{bins}x{levels}"),
            Recipe::ExponentialTilt { bins } => format!("tilt-{bins}"),
            Recipe::MixtureSweep { steps } => format!("mix-{steps}"),
            Recipe::Custom(name) => name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub id: String,
    pub measure: Measure,
    pub entropy: EntropyEstimate,
}

/// A finite set of measures with entropy estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFamily {
    pub recipe: Recipe,
    pub members: Vec<Candidate>,
}

impl CandidateFamily {
    /// Estimates the entropy of every measure with `estimate`.
    pub fn estimate<F>(recipe: Recipe, measures: Vec<(String, Measure)>, mut estimate: F) -> Result<Self>
    where
        F: FnMut(&Measure) -> Result<EntropyEstimate>,
    {
        if measures.is_empty() {
            return Err(Error::input("candidate family must be nonempty"));
        }
        let members = measures
            .into_iter()
            .map(|(id, measure)| {
                let entropy = estimate(&measure)?;
                Ok(Candidate { id, measure, entropy })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { recipe, members })
    }

    pub fn from_members(recipe: Recipe, members: Vec<Candidate>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::input("candidate family must be nonempty"));
        }
        Ok(Self { recipe, members })
    }
}

fn scaled_histogram(masses: Vec<f64>, mass: f64) -> Result<Measure> {
    let total: f64 = masses.iter().sum();
    let h = Histogram::new(masses.into_iter().map(|m| m * mass / total).collect())?;
    Ok(h.to_measure())
}

/// Every histogram on `bins` cells with masses in multiples of
/// `mass / levels`, as midpoint atoms.
pub fn histogram_grid_measures(bins: usize, levels: usize, mass: f64) -> Result<Vec<(String, Measure)>> {
    if bins == 0 || levels == 0 || bins > 16 {
        return Err(Error::input("histogram grid needs 1..=16 bins and positive levels"));
    }
    let mut out = Vec::new();
    let mut err = None;
    Simplex { dim: bins }.for_each(levels as u32, |idx, x| {
        if err.is_some() {
            return;
        }
        match scaled_histogram(x.iter().map(|&c| f64::from(c)).collect(), mass) {
            Ok(m) => out.push((format!("grid{idx}"), m)),
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Histograms of the densities `exp(theta u)` on `bins` cells.
pub fn tilt_measures(bins: usize, thetas: &[f64], mass: f64) -> Result<Vec<(String, Measure)>> {
    thetas
        .iter()
        .map(|&theta| {
            let cdf = |x: f64| {
                if theta.abs() < 1e-12 {
                    x
                } else {
                    (exp(theta * x) - 1.0) / (exp(theta) - 1.0)
                }
            };
            let h = Histogram::from_cdf(bins, cdf)?;
            let masses = h.masses().to_vec();
            Ok((format!("tilt{theta}"), scaled_histogram(masses, mass)?))
        })
        .collect()
}

/// `(1 - w) a + w b` for `w = 0, 1/steps, ..., 1`.
pub fn mixture_measures(a: &Measure, b: &Measure, steps: usize) -> Result<Vec<(String, Measure)>> {
    if steps == 0 {
        return Err(Error::input("mixture sweep needs at least one step"));
    }
    (0..=steps)
        .map(|i| {
            let w = i as f64 / steps as f64;
            let m = a.scale(1.0 - w)?.add(&b.scale(w)?);
            Ok((format!("mix{i}"), m))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalSup {
    pub value: f64,
    pub argmax: usize,
    /// Largest band among the members.
    pub band: f64,
}

/// `max over the family of beta <tau, nu> + entropy(nu)`.
pub fn variational_sup(beta: f64, tau: &TauFn, family: &CandidateFamily) -> VariationalSup {
    let mut best = VariationalSup {
        value: f64::NEG_INFINITY,
        argmax: 0,
        band: 0.0,
    };
    for (i, c) in family.members.iter().enumerate() {
        let v = beta * integral(tau, &c.measure) + c.entropy.value;
        if v > best.value {
            best.value = v;
            best.argmax = i;
        }
        if c.entropy.band.is_finite() {
            best.band = best.band.max(c.entropy.band);
        }
    }
    best
}

/// The free energy against the best candidate of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalReport {
    pub beta: f64,
    pub tau_id: u64,
    pub family_id: String,
    pub sup_value: f64,
    pub argmax_nu_id: String,
    pub gibbs_value: f64,
    /// `gibbs_value - sup_value`; nonnegative up to the bands.
    pub gap: f64,
    /// `(sup band, gibbs band)`.
    pub bands: (f64, f64),
}

pub fn variational_report(beta: f64, tau: &TauFn, family: &CandidateFamily, gibbs: &GibbsEstimate) -> VariationalReport {
    let sup = variational_sup(beta, tau, family);
    VariationalReport {
        beta,
        tau_id: tau.fingerprint(),
        family_id: family.recipe.id(),
        sup_value: sup.value,
        argmax_nu_id: family.members[sup.argmax].id.clone(),
        gibbs_value: gibbs.value,
        gap: gibbs.value - sup.value,
        bands: (sup.band, gibbs.band),
    }
}

/// Step functions on `bins` equal cells: every value vector in
/// `{-1, 0, 1}^bins`, then `random` ladders with values uniform in `[-2, 2]`.
pub fn tau_ladder_family(bins: usize, random: usize, seed: u64) -> Result<Vec<TauFn>> {
    if bins == 0 || bins > 8 {
        return Err(Error::input("tau ladder family supports 1..=8 bins"));
    }
    let total = 3usize.pow(bins as u32);
    let mut out = Vec::with_capacity(total + random);
    for code in 0..total {
        let mut c = code;
        let values = (0..bins)
            .map(|_| {
                let v = (c % 3) as f64 - 1.0;
                c /= 3;
                v
            })
            .collect();
        out.push(TauFn::uniform_cells(values)?);
    }
    let mut rng = CounterRng::new(seed, 0x7a0);
    for _ in 0..random {
        let values = (0..bins).map(|_| 4.0 * rng.next_f64() - 2.0).collect();
        out.push(TauFn::uniform_cells(values)?);
    }
    Ok(out)
}

/// Settings of the conjugate search.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateSearch {
    pub beta: f64,
    /// Coordinate-ascent starts: the best family member, then random ladders.
    pub restarts: usize,
    pub seed: u64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_sweeps: usize,
    /// Ladder values are clamped to `[-value_cap, value_cap]`.
    pub value_cap: f64,
}

impl Default for ConjugateSearch {
    fn default() -> Self {
        Self {
            beta: 1.0,
            restarts: 3,
            seed: 0,
            initial_step: 0.5,
            min_step: 0.05,
            max_sweeps: 12,
            value_cap: 64.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateResult {
    pub estimate: EntropyEstimate,
    /// Maximizer of `beta <tau, nu> - G(tau)` found by the search.
    pub tau: TauFn,
    pub gibbs: GibbsEstimate,
    /// Distinct free-energy evaluations performed.
    pub evaluations: usize,
}

struct Objective<'a, G> {
    beta: f64,
    target: &'a Measure,
    gibbs: G,
    cache: BTreeMap<(Vec<u64>, Vec<u64>), (f64, GibbsEstimate)>,
}

impl<G: FnMut(&TauFn) -> Result<GibbsEstimate>> Objective<'_, G> {
    fn eval(&mut self, tau: &TauFn) -> Result<f64> {
        let key = (
            tau.breakpoints().iter().map(|b| b.to_bits()).collect(),
            tau.values().iter().map(|v| v.to_bits()).collect(),
        );
        if let Some((v, _)) = self.cache.get(&key) {
            return Ok(*v);
        }
        let g = (self.gibbs)(tau)?;
        let v = self.beta * integral(tau, self.target) - g.value;
        self.cache.insert(key, (v, g));
        Ok(v)
    }

    fn gibbs_of(&self, tau: &TauFn) -> GibbsEstimate {
        let key = (
            tau.breakpoints().iter().map(|b| b.to_bits()).collect(),
            tau.values().iter().map(|v| v.to_bits()).collect(),
        );
        self.cache[&key].1.clone()
    }

    /// Coordinate ascent on the ladder values. A successful step doubles
    /// the step size in the same direction; a failed coordinate halves it.
    fn ascend(&mut self, start: TauFn, cfg: &ConjugateSearch) -> Result<(TauFn, f64, bool)> {
        let mut tau = start;
        let mut best = self.eval(&tau)?;
        let mut steps = vec![cfg.initial_step; tau.cells()];
        for _ in 0..cfg.max_sweeps {
            let mut improved = false;
            for j in 0..tau.cells() {
                if steps[j] < cfg.min_step {
                    continue;
                }
                let mut moved = false;
                for dir in [1.0, -1.0] {
                    let mut h = steps[j];
                    loop {
                        let mut values = tau.values().to_vec();
                        values[j] = (values[j] + dir * h).clamp(-cfg.value_cap, cfg.value_cap);
                        if values[j] == tau.values()[j] {
                            break;
                        }
                        let trial = tau.with_values(values)?;
                        let v = self.eval(&trial)?;
                        if v > best {
                            best = v;
                            tau = trial;
                            moved = true;
                            h *= 2.0;
                        } else {
                            break;
                        }
                    }
                    if moved {
                        steps[j] = (h / 2.0).max(cfg.initial_step);
                        break;
                    }
                }
                if moved {
                    improved = true;
                } else {
                    steps[j] /= 2.0;
                }
            }
            if !improved && steps.iter().all(|&s| s < cfg.min_step) {
                return Ok((tau, best, true));
            }
        }
        Ok((tau, best, false))
    }
}

/// Conjugate estimate `-max_tau [beta <tau, nu> - G(tau)]` with `G` supplied
/// by `gibbs`. The family is scanned first; coordinate ascent then refines
/// the best member and `restarts - 1` random ladders of the same shape.
///
/// Restricting `tau` can only lower the maximum, so the estimate is an
/// upper bound on the entropy up to the free-energy bands.
pub fn conjugate_entropy<G>(
    target: &Measure,
    family: &[TauFn],
    upper_bound: f64,
    cfg: &ConjugateSearch,
    gibbs: G,
) -> Result<ConjugateResult>
where
    G: FnMut(&TauFn) -> Result<GibbsEstimate>,
{
    if family.is_empty() {
        return Err(Error::input("tau family must be nonempty"));
    }
    let mut obj = Objective {
        beta: cfg.beta,
        target,
        gibbs,
        cache: BTreeMap::new(),
    };
    let mut best_tau = family[0].clone();
    let mut best = f64::NEG_INFINITY;
    for tau in family {
        let v = obj.eval(tau)?;
        if v > best {
            best = v;
            best_tau = tau.clone();
        }
    }
    let mut converged = true;
    let mut starts = vec![best_tau.clone()];
    let mut rng = CounterRng::new(cfg.seed, 0x5ea7c4);
    if !best_tau.is_constant() {
        for _ in 1..cfg.restarts {
            let values = (0..best_tau.cells()).map(|_| 4.0 * rng.next_f64() - 2.0).collect();
            starts.push(best_tau.with_values(values)?);
        }
    }
    for start in starts {
        let (tau, v, ok) = obj.ascend(start, cfg)?;
        converged &= ok;
        if v > best {
            best = v;
            best_tau = tau;
        }
    }
    let g = obj.gibbs_of(&best_tau);
    let shift = cfg.beta * integral(&best_tau, target);
    let value = -best;
    let estimate = EntropyEstimate {
        method: Method::Conjugate,
        value,
        n_ladder: g.n_ladder.iter().map(|&(n, v)| (n, v - shift)).collect(),
        extrapolated: value,
        band: g.band,
        diagnostics: Diagnostics {
            monotone: converged,
            exceeds_upper_bound: value > upper_bound + g.band,
            ..Diagnostics::default()
        },
    };
    Ok(ConjugateResult {
        estimate,
        tau: best_tau,
        gibbs: g,
        evaluations: obj.cache.len(),
    })
}

/// [`conjugate_entropy`] in direction `q`, with free energies from
/// [`gibbs_estimate`] over the given ladder.
pub fn conjugate_entropy_direction(
    q: &Direction,
    target: &Measure,
    family: &[TauFn],
    cfg: &ConjugateSearch,
    scales: &[u64],
    seeds: &[u64],
) -> Result<ConjugateResult> {
    let ensemble = Ensemble::Direction(q.clone());
    let beta = cfg.beta;
    conjugate_entropy(target, family, shannon_entropy(q), cfg, |tau| {
        gibbs_estimate(&ensemble, q.dim(), beta, tau, scales, seeds)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KlBudgetReport {
    /// `H(q)`.
    pub limit_rate: f64,
    pub kl: f64,
    pub entropy: f64,
    /// `H(q) - KL - entropy`.
    pub slack: f64,
    pub band: f64,
    pub violated: bool,
}

fn require_unit_direction(q: &Direction) -> Result<()> {
    if (q.l1() - 1.0).abs() > 1e-12 {
        return Err(Error::input("the KL budget compares probability measures; |q|_1 must be 1"));
    }
    Ok(())
}

/// Budget `KL(nu || Lambda) + entropy <= H(q)` for a histogram target.
pub fn kl_budget_check(q: &Direction, nu: &Histogram, estimate: &EntropyEstimate) -> Result<KlBudgetReport> {
    require_unit_direction(q)?;
    let kl = nu.kl_divergence()?;
    Ok(budget_report(shannon_entropy(q), kl, estimate))
}

/// Budget check for an atomic target. Atoms are singular with respect to
/// Lebesgue measure, so the divergence is infinite and the budget holds only
/// when the estimate is `-inf`.
pub fn kl_budget_check_atomic(q: &Direction, nu: &Measure, estimate: &EntropyEstimate) -> Result<KlBudgetReport> {
    require_unit_direction(q)?;
    let kl = nu.kl_divergence()?;
    Ok(budget_report(shannon_entropy(q), kl, estimate))
}

fn budget_report(h: f64, kl: f64, estimate: &EntropyEstimate) -> KlBudgetReport {
    let entropy = estimate.value;
    let slack = if entropy == f64::NEG_INFINITY {
        f64::INFINITY
    } else if kl == f64::INFINITY {
        f64::NEG_INFINITY
    } else {
        h - kl - entropy
    };
    KlBudgetReport {
        limit_rate: h,
        kl,
        entropy,
        slack,
        band: estimate.band,
        violated: slack < -estimate.band,
    }
}

/// `KL(Bern(s) || Bern(p))`.
pub fn bernoulli_kl(s: f64, p: f64) -> f64 {
    xlogx(s) - s * ln(p) + xlogx(1.0 - s) - (1.0 - s) * ln(1.0 - p)
}

/// Number of length-`n` paths in `env` with at least `min_ones` labels in
/// `[1 - p, 1]`, by a forward sweep over (vertex, capped count) states.
pub fn count_paths_with_ones(env: &Environment, n: u32, p: f64, min_ones: u32) -> f64 {
    let dim = env.dim();
    let simplex = Simplex { dim };
    let tau = TauFn::indicator_from(1.0 - p);
    let width = min_ones as usize + 1;
    let mut prev = vec![0.0f64; width];
    prev[0] = 1.0;
    let mut anchor = vec![0u32; dim];
    for k in 1..=n {
        let mut cur = vec![0.0f64; simplex.size(k) * width];
        simplex.for_each(k, |idx, x| {
            let row = &mut cur[idx * width..(idx + 1) * width];
            for i in 0..dim {
                if x[i] == 0 {
                    continue;
                }
                anchor.copy_from_slice(x);
                anchor[i] -= 1;
                let one = tau.eval(env.edge_label(&anchor, i)) > 0.5;
                let base = simplex.rank(&anchor, k - 1) * width;
                for c in 0..width {
                    let v = prev[base + c];
                    if v != 0.0 {
                        let to = if one { (c + 1).min(width - 1) } else { c };
                        row[to] += v;
                    }
                }
            }
        });
        prev = cur;
    }
    prev.chunks(width).map(|row| row[width - 1]).sum()
}

pub const BERNOULLI_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliRow {
    pub n: u32,
    pub min_ones: u32,
    /// `(1/n) log count` per seed; `-inf` when no path qualifies.
    pub exponents: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliReport {
    pub dim: usize,
    pub p: f64,
    pub s: f64,
    /// `log D - KL(Bern(s) || Bern(p))` for `s > p`, else `log D`.
    pub budget: f64,
    pub rows: Vec<BernoulliRow>,
    /// Mean exponent at the largest scale.
    pub measured: f64,
    pub within_budget: bool,
}

/// Exponent of the number of length-`n` paths with at least `ceil(ns)`
/// weight-one edges when weights are `1{U >= 1 - p}`.
pub fn bernoulli_exponent_check(dim: usize, p: f64, s: f64, scales: &[u32], seeds: &[u64]) -> Result<BernoulliReport> {
    if !(p > 0.0 && p < 1.0) || !(s > 0.0 && s <= 1.0) {
        return Err(Error::input("need 0 < p < 1 and 0 < s <= 1"));
    }
    if dim == 0 || scales.is_empty() || seeds.is_empty() || scales.contains(&0) {
        return Err(Error::input("bernoulli check needs a dimension, scales and seeds"));
    }
    let log_d = ln(dim as f64);
    let budget = if s > p { log_d - bernoulli_kl(s, p) } else { log_d };
    let rows: Vec<BernoulliRow> = scales
        .iter()
        .map(|&n| {
            let min_ones = libm::ceil(f64::from(n) * s - 1e-9) as u32;
            let exponents: Vec<f64> = seeds
                .iter()
                .map(|&seed| {
                    let c = count_paths_with_ones(&Environment::new(seed, dim), n, p, min_ones);
                    if c > 0.0 {
                        ln(c) / f64::from(n)
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            let mean = exponents.iter().sum::<f64>() / exponents.len() as f64;
            BernoulliRow {
                n,
                min_ones,
                exponents,
                mean,
            }
        })
        .collect();
    let largest = rows
        .iter()
        .max_by_key(|r| r.n)
        .expect("scales are nonempty");
    let measured = largest.mean;
    Ok(BernoulliReport {
        dim,
        p,
        s,
        budget,
        measured,
        within_budget: measured <= budget + BERNOULLI_TOLERANCE,
        rows,
    })
}
