//! NE lattice paths: directions, endpoints, counts and exhaustive enumeration.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigUint;

use crate::environment::Environment;
use crate::math::{gcd, ln};
use crate::measure::Measure;
use crate::tau::TauFn;
use crate::{Error, Result};

/// Default cap on the number of paths an enumeration may visit.
pub const DEFAULT_PATH_BUDGET: u64 = 100_000_000;

/// A point of `Z^D_{>=0}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint(pub Vec<u32>);

impl LatticePoint {
    pub fn new(coords: Vec<u32>) -> Self {
        Self(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    pub fn l1(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }

    /// `true` when `other - self` has non-negative coordinates.
    pub fn precedes(&self, other: &LatticePoint) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn offset_to(&self, other: &LatticePoint) -> Option<LatticePoint> {
        if !self.precedes(other) {
            return None;
        }
        Some(LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| b - a).collect()))
    }

    pub fn plus(&self, other: &LatticePoint) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for LatticePoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let coords = s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::input("lattice coordinates must be non-negative integers"))
            })
            .collect::<Result<Vec<_>>>()?;
        if coords.is_empty() {
            return Err(Error::input("empty lattice point"));
        }
        Ok(Self(coords))
    }
}

/// A non-negative rational, e.g. a level `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    num: u64,
    den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::input("zero denominator"));
        }
        let g = gcd(num, den).max(1);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(k: u64) -> Self {
        Self { num: k, den: 1 }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn floor_times(&self, n: u64) -> u64 {
        (u128::from(n) * u128::from(self.num) / u128::from(self.den)) as u64
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::input("expected a non-negative rational like 3/4 or 2");
        match s.trim().split_once('/') {
            Some((a, b)) => Rational::new(
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ),
            None => Ok(Rational::integer(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// A rational direction `q = numerators / denominator` in `Q^D_{>=0}`,
/// stored gcd-reduced so `floor(n q)` is exact integer arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Direction {
    numerators: Vec<u64>,
    denominator: u64,
}

impl Direction {
    pub fn new(numerators: Vec<u64>, denominator: u64) -> Result<Self> {
        if numerators.is_empty() {
            return Err(Error::input("direction needs at least one coordinate"));
        }
        if denominator == 0 {
            return Err(Error::input("zero denominator"));
        }
        let g = numerators.iter().fold(denominator, |g, &x| gcd(g, x));
        Ok(Self {
            numerators: numerators.iter().map(|x| x / g).collect(),
            denominator: denominator / g,
        })
    }

    /// Builds a direction from per-coordinate rationals.
    pub fn from_rationals(parts: &[Rational]) -> Result<Self> {
        let den = parts
            .iter()
            .fold(1u64, |l, r| l / gcd(l, r.den()) * r.den());
        Self::new(parts.iter().map(|r| r.num() * (den / r.den())).collect(), den)
    }

    /// The direction `point / n`, so that `floor(n q) = point`.
    pub fn toward(point: &LatticePoint, n: u64) -> Result<Self> {
        Self::new(point.0.iter().map(|&c| u64::from(c)).collect(), n)
    }

    /// The balanced direction `(t/D, ..., t/D)`.
    pub fn balanced(dim: usize, t: Rational) -> Result<Self> {
        Self::new(vec![t.num(); dim], t.den() * dim as u64)
    }

    pub fn dim(&self) -> usize {
        self.numerators.len()
    }

    pub fn numerators(&self) -> &[u64] {
        &self.numerators
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn component(&self, i: usize) -> f64 {
        self.numerators[i] as f64 / self.denominator as f64
    }

    pub fn l1(&self) -> f64 {
        self.numerators.iter().sum::<u64>() as f64 / self.denominator as f64
    }

    /// `floor(n q)` coordinatewise.
    pub fn floor_scaled(&self, n: u64) -> LatticePoint {
        LatticePoint(
            self.numerators
                .iter()
                .map(|&x| (u128::from(n) * u128::from(x) / u128::from(self.denominator)) as u32)
                .collect(),
        )
    }

    /// `true` when `other - self` lies in `Q^D_{>=0}`.
    pub fn precedes(&self, other: &Direction) -> bool {
        self.dim() == other.dim()
            && self
                .numerators
                .iter()
                .zip(&other.numerators)
                .all(|(a, b)| u128::from(*a) * u128::from(other.denominator) <= u128::from(*b) * u128::from(self.denominator))
    }

    pub fn scaled(&self, c: Rational) -> Result<Self> {
        Self::new(
            self.numerators.iter().map(|x| x * c.num()).collect(),
            self.denominator * c.den(),
        )
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(',')
            .map(str::parse::<Rational>)
            .collect::<Result<Vec<_>>>()?;
        Self::from_rationals(&parts)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &x) in self.numerators.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            let r = Rational::new(x, self.denominator).map_err(|_| fmt::Error)?;
            f.write_str(&r.to_string())?;
        }
        Ok(())
    }
}

/// Number of NE paths from the origin to `endpoint`: the multinomial
/// coefficient `(|x|_1)! / prod x_i!`.
pub fn path_count(endpoint: &LatticePoint) -> BigUint {
    let mut count = BigUint::from(1u8);
    let mut length = 0u64;
    for &c in endpoint.coords() {
        for i in 1..=u64::from(c) {
            length += 1;
            count *= length;
            count /= i;
        }
    }
    count
}

/// `H(q) = sum_i -q_i log(q_i / |q|_1)` with `0 log 0 = 0`.
pub fn shannon_entropy(q: &Direction) -> f64 {
    let total: u64 = q.numerators().iter().sum();
    if total == 0 {
        return 0.0;
    }
    let den = q.denominator() as f64;
    q.numerators()
        .iter()
        .filter(|&&x| x > 0)
        .map(|&x| -(x as f64 / den) * ln(x as f64 / total as f64))
        .sum()
}

/// A directed path: a start point and a sequence of 0-based step directions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub start: LatticePoint,
    pub steps: Vec<usize>,
}

impl Path {
    pub fn new(start: LatticePoint, steps: Vec<usize>) -> Self {
        Self { start, steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn end(&self) -> LatticePoint {
        let mut p = self.start.clone();
        for &s in &self.steps {
            p.0[s] += 1;
        }
        p
    }

    /// `(anchor, step)` for every edge along the path.
    pub fn edges(&self) -> impl Iterator<Item = (LatticePoint, usize)> + '_ {
        let mut cur = self.start.clone();
        self.steps.iter().map(move |&s| {
            let anchor = cur.clone();
            cur.0[s] += 1;
            (anchor, s)
        })
    }

    pub fn labels(&self, env: &Environment) -> Vec<f64> {
        self.edges()
            .map(|(anchor, s)| env.edge_label(anchor.coords(), s))
            .collect()
    }

    /// Unnormalized empirical measure `sum_e delta_{U_e}`.
    pub fn empirical_measure(&self, env: &Environment) -> Measure {
        let mut labels = self.labels(env);
        labels.sort_by(f64::total_cmp);
        Measure::from_sorted_labels(&labels, 1.0)
    }

    /// Concatenation `self . other`; `other` must start where `self` ends.
    pub fn concat(&self, other: &Path) -> Option<Path> {
        if self.end() != other.start {
            return None;
        }
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        Some(Path::new(self.start.clone(), steps))
    }
}

/// Passage time `T(pi) = sum_e tau(U_e)`.
pub fn path_weight(env: &Environment, tau: &TauFn, path: &Path) -> f64 {
    path.edges()
        .map(|(anchor, s)| tau.eval(env.edge_label(anchor.coords(), s)))
        .sum()
}

/// What an enumeration visitor sees at each complete path.
#[derive(Debug)]
pub struct PathVisit<'v> {
    pub start: &'v LatticePoint,
    pub steps: &'v [usize],
    /// Edge labels of the path, sorted ascending.
    pub labels: &'v [f64],
    pub end: &'v [u32],
}

impl PathVisit<'_> {
    pub fn to_path(&self) -> Path {
        Path::new(self.start.clone(), self.steps.to_vec())
    }

    /// `weight * (empirical measure)`.
    pub fn measure(&self, weight: f64) -> Measure {
        Measure::from_sorted_labels(self.labels, weight)
    }
}

/// Depth-first enumerator of NE paths in a fixed environment.
///
/// The sorted label multiset is maintained incrementally: a label is
/// inserted on descent and removed on backtrack.
#[derive(Debug, Clone)]
pub struct PathEnumerator<'e> {
    env: &'e Environment,
    start: LatticePoint,
    budget: u64,
}

struct DfsState<'a> {
    cur: Vec<u32>,
    steps: Vec<usize>,
    labels: Vec<f64>,
    slots: Vec<usize>,
    start: &'a LatticePoint,
    visited: u64,
}

impl<'a> DfsState<'a> {
    fn new(start: &'a LatticePoint) -> Self {
        Self {
            cur: start.0.clone(),
            steps: Vec::new(),
            labels: Vec::new(),
            slots: Vec::new(),
            start,
            visited: 0,
        }
    }

    fn push(&mut self, env: &Environment, step: usize) {
        let u = env.edge_label(&self.cur, step);
        let slot = self.labels.partition_point(|&x| x < u);
        self.labels.insert(slot, u);
        self.slots.push(slot);
        self.steps.push(step);
        self.cur[step] += 1;
    }

    fn pop(&mut self) {
        let step = self.steps.pop().expect("pop on empty path");
        self.cur[step] -= 1;
        let slot = self.slots.pop().expect("slot stack in sync");
        self.labels.remove(slot);
    }

    fn emit(&mut self, visit: &mut dyn FnMut(&PathVisit<'_>)) {
        self.visited += 1;
        visit(&PathVisit {
            start: self.start,
            steps: &self.steps,
            labels: &self.labels,
            end: &self.cur,
        });
    }
}

impl<'e> PathEnumerator<'e> {
    pub fn new(env: &'e Environment) -> Self {
        Self {
            env,
            start: LatticePoint::origin(env.dim()),
            budget: DEFAULT_PATH_BUDGET,
        }
    }

    pub fn starting_at(mut self, start: LatticePoint) -> Self {
        assert_eq!(start.dim(), self.env.dim(), "start point dimension");
        self.start = start;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn start(&self) -> &LatticePoint {
        &self.start
    }

    fn check_budget(&self, count: BigUint) -> Result<()> {
        if count > BigUint::from(self.budget) {
            return Err(Error::BudgetExceeded {
                count,
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// Visits every NE path from the start point to `end`. Returns the
    /// number of visited paths.
    pub fn for_each_to(
        &self,
        end: &LatticePoint,
        visit: impl FnMut(&PathVisit<'_>),
    ) -> Result<u64> {
        self.for_each_to_with_prefix(end, &[], visit)
    }

    /// Like [`PathEnumerator::for_each_to`], restricted to the paths that
    /// begin with `prefix`. Disjoint prefixes split the work.
    pub fn for_each_to_with_prefix(
        &self,
        end: &LatticePoint,
        prefix: &[usize],
        mut visit: impl FnMut(&PathVisit<'_>),
    ) -> Result<u64> {
        let offset = self
            .start
            .offset_to(end)
            .ok_or_else(|| Error::input("endpoint is not north-east of the start point"))?;
        self.check_budget(path_count(&offset))?;
        let mut state = DfsState::new(&self.start);
        for &s in prefix {
            if s >= self.env.dim() || state.cur[s] >= end.0[s] {
                return Err(Error::input("prefix leaves the endpoint box"));
            }
            state.push(self.env, s);
        }
        let remaining = end.l1() - state.cur.iter().map(|&c| u64::from(c)).sum::<u64>();
        self.dfs_box(&mut state, end.coords(), remaining, &mut visit);
        Ok(state.visited)
    }

    fn dfs_box(
        &self,
        state: &mut DfsState<'_>,
        end: &[u32],
        remaining: u64,
        visit: &mut dyn FnMut(&PathVisit<'_>),
    ) {
        if remaining == 0 {
            state.emit(visit);
            return;
        }
        for step in 0..self.env.dim() {
            if state.cur[step] < end[step] {
                state.push(self.env, step);
                self.dfs_box(state, end, remaining - 1, visit);
                state.pop();
            }
        }
    }

    /// Visits all `D^length` paths of the given length from the start point.
    pub fn for_each_of_length(
        &self,
        length: u64,
        mut visit: impl FnMut(&PathVisit<'_>),
    ) -> Result<u64> {
        let total = BigUint::from(self.env.dim()).pow(length as u32);
        self.check_budget(total)?;
        let mut state = DfsState::new(&self.start);
        self.dfs_free(&mut state, length, &mut visit);
        Ok(state.visited)
    }

    fn dfs_free(
        &self,
        state: &mut DfsState<'_>,
        remaining: u64,
        visit: &mut dyn FnMut(&PathVisit<'_>),
    ) {
        if remaining == 0 {
            state.emit(visit);
            return;
        }
        for step in 0..self.env.dim() {
            state.push(self.env, step);
            self.dfs_free(state, remaining - 1, visit);
            state.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::ln_big;

    fn pt(c: &[u32]) -> LatticePoint {
        LatticePoint::new(c.to_vec())
    }

    /// Counts paths by brute recursion, independent of the multinomial.
    fn count_dfs(c: &mut [u32]) -> u64 {
        if c.iter().all(|&x| x == 0) {
            return 1;
        }
        let mut total = 0;
        for i in 0..c.len() {
            if c[i] > 0 {
                c[i] -= 1;
                total += count_dfs(c);
                c[i] += 1;
            }
        }
        total
    }

    #[test]
    fn path_count_examples() {
        assert_eq!(path_count(&pt(&[2, 2])), BigUint::from(6u8));
        assert_eq!(path_count(&pt(&[7, 0, 0])), BigUint::from(1u8));
        assert_eq!(path_count(&pt(&[3, 2, 1])), BigUint::from(60u8));
        assert_eq!(count_dfs(&mut [3, 2, 1]), 60);
        assert_eq!(path_count(&pt(&[0, 0])), BigUint::from(1u8));
    }

    #[test]
    fn entropy_examples() {
        let half: Direction = "1/2,1/2".parse().unwrap();
        assert!((shannon_entropy(&half) - core::f64::consts::LN_2).abs() < 1e-15);
        let axis: Direction = "1,0".parse().unwrap();
        assert_eq!(shannon_entropy(&axis), 0.0);
        let skew: Direction = "2/3,1/3".parse().unwrap();
        let closed = ln(3.0) - 2.0 / 3.0 * core::f64::consts::LN_2;
        assert!((shannon_entropy(&skew) - closed).abs() < 1e-15);
        assert!((closed - 0.63651).abs() < 1e-5);
        // finite-n count rate at n = 3000
        let rate = ln_big(&path_count(&skew.floor_scaled(3000))) / 3000.0;
        assert!((rate - closed).abs() < 5e-3);
    }

    #[test]
    fn entropy_is_homogeneous() {
        let q: Direction = "1/5,3/10,1/2".parse().unwrap();
        let q3 = q.scaled(Rational::integer(3)).unwrap();
        assert!((shannon_entropy(&q3) - 3.0 * shannon_entropy(&q)).abs() < 1e-13);
        let ell = Direction::balanced(3, Rational::integer(2)).unwrap();
        assert!((shannon_entropy(&ell) - 2.0 * ln(3.0)).abs() < 1e-14);
    }

    #[test]
    fn direction_parsing_and_floor() {
        let q: Direction = "2/4, 1/3".parse().unwrap();
        assert_eq!(q.numerators(), &[3, 2]);
        assert_eq!(q.denominator(), 6);
        assert_eq!(q.floor_scaled(7), pt(&[3, 2]));
        assert_eq!(q.to_string(), "1/2,1/3");
        assert!("1/0".parse::<Direction>().is_err());
        assert!("a,b".parse::<Direction>().is_err());
        let p: Direction = "1/4,1/3".parse().unwrap();
        assert!(p.precedes(&q));
        assert!(!q.precedes(&p));
    }

    #[test]
    fn enumeration_counts() {
        let env = Environment::new(1, 2);
        let en = PathEnumerator::new(&env);
        assert_eq!(en.for_each_to(&pt(&[1, 1]), |_| {}).unwrap(), 2);
        let mut lens = Vec::new();
        assert_eq!(en.for_each_to(&pt(&[2, 2]), |v| lens.push(v.steps.len())).unwrap(), 6);
        assert!(lens.iter().all(|&l| l == 4));
        assert_eq!(en.for_each_to(&pt(&[3, 3]), |_| {}).unwrap(), 20);
        assert_eq!(en.for_each_of_length(5, |_| {}).unwrap(), 32);
    }

    #[test]
    fn enumeration_labels_are_sorted_path_labels() {
        let env = Environment::new(5, 3);
        let en = PathEnumerator::new(&env);
        let mut seen = 0;
        en.for_each_to(&pt(&[2, 1, 1]), |v| {
            let mut expect = v.to_path().labels(&env);
            expect.sort_by(f64::total_cmp);
            assert_eq!(v.labels, expect.as_slice());
            assert_eq!(v.end, &[2, 1, 1]);
            seen += 1;
        })
        .unwrap();
        assert_eq!(seen, 12);
    }

    #[test]
    fn prefixes_partition_the_paths() {
        let env = Environment::new(9, 2);
        let en = PathEnumerator::new(&env);
        let end = pt(&[3, 4]);
        let a = en.for_each_to_with_prefix(&end, &[0], |_| {}).unwrap();
        let b = en.for_each_to_with_prefix(&end, &[1], |_| {}).unwrap();
        assert_eq!(a + b, 35);
        assert!(en.for_each_to_with_prefix(&pt(&[0, 2]), &[0], |_| {}).is_err());
    }

    #[test]
    fn budget_refusal_reports_count() {
        let env = Environment::new(1, 2);
        let en = PathEnumerator::new(&env).with_budget(5);
        match en.for_each_to(&pt(&[2, 2]), |_| {}) {
            Err(Error::BudgetExceeded { count, budget }) => {
                assert_eq!(count, BigUint::from(6u8));
                assert_eq!(budget, 5);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
        assert!(en.for_each_of_length(3, |_| {}).is_err());
    }

    #[test]
    fn shifted_start() {
        let env = Environment::new(2, 2);
        let en = PathEnumerator::new(&env).starting_at(pt(&[2, 1]));
        let mut ends = 0;
        en.for_each_to(&pt(&[3, 2]), |v| {
            assert_eq!(v.start, &pt(&[2, 1]));
            ends += 1;
        })
        .unwrap();
        assert_eq!(ends, 2);
        assert!(en.for_each_to(&pt(&[1, 5]), |_| {}).is_err());
    }

    #[test]
    fn path_weight_constant_tau() {
        let env = Environment::new(3, 2);
        let p = Path::new(LatticePoint::origin(2), vec![0, 1, 1, 0, 0]);
        assert!((path_weight(&env, &TauFn::constant(1.5), &p) - 7.5).abs() < 1e-15);
        assert_eq!(path_weight(&env, &TauFn::zero(), &p), 0.0);
        assert_eq!(p.end(), pt(&[3, 2]));
    }

    #[test]
    fn concatenation_adds_empirical_measures() {
        let env = Environment::new(17, 2);
        let a = Path::new(LatticePoint::origin(2), vec![0, 1, 0]);
        let b = Path::new(a.end(), vec![1, 1, 0, 1]);
        let ab = a.concat(&b).unwrap();
        assert_eq!(
            ab.empirical_measure(&env),
            a.empirical_measure(&env).add(&b.empirical_measure(&env))
        );
        assert!(b.concat(&a).is_none());
    }
}
