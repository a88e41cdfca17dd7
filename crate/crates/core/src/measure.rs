//! Finite non-negative atomic measures on `[0, 1]` and histograms.

use alloc::vec::Vec;

use crate::math::{ln, xlogx};
use crate::tau::TauFn;
use crate::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

/// A finite non-negative measure on `[0, 1]` with finitely many atoms.
///
/// Atoms are kept sorted by position, positions are distinct and every
/// stored mass is strictly positive. Equal positions are merged exactly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Measure {
    atoms: Vec<Atom>,
    total_mass: f64,
}

/// Sorts, merges equal positions and drops zero masses.
fn normalize_atoms(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for atom in atoms {
        if atom.mass == 0.0 {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.position == atom.position => last.mass += atom.mass,
            _ => out.push(atom),
        }
    }
    out
}

impl Measure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_atoms<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut raw = Vec::new();
        for (position, mass) in atoms {
            if !(0.0..=1.0).contains(&position) {
                return Err(Error::input("atom position outside [0, 1]"));
            }
            if !(mass >= 0.0 && mass.is_finite()) {
                return Err(Error::input("atom mass must be finite and non-negative"));
            }
            raw.push(Atom { position, mass });
        }
        Ok(Self::from_validated(normalize_atoms(raw)))
    }

    fn from_validated(atoms: Vec<Atom>) -> Self {
        let total_mass = atoms.iter().map(|a| a.mass).sum();
        Self { atoms, total_mass }
    }

    pub fn dirac(position: f64, mass: f64) -> Result<Self> {
        Self::from_atoms([(position, mass)])
    }

    /// Sum of unit Dirac masses at the given labels (not normalized).
    pub fn empirical(labels: &[f64]) -> Result<Self> {
        Self::from_atoms(labels.iter().map(|&u| (u, 1.0)))
    }

    /// Like [`Measure::empirical`] but every atom carries `weight`.
    pub fn empirical_weighted(labels: &[f64], weight: f64) -> Result<Self> {
        Self::from_atoms(labels.iter().map(|&u| (u, weight)))
    }

    /// Builds `weight * sum delta_u` from labels that are already sorted
    /// and known to lie in `[0, 1]`. Used on hot paths by the enumerators.
    pub(crate) fn from_sorted_labels(labels: &[f64], weight: f64) -> Self {
        let mut atoms: Vec<Atom> = Vec::with_capacity(labels.len());
        for &u in labels {
            match atoms.last_mut() {
                Some(last) if last.position == u => last.mass += weight,
                _ => atoms.push(Atom {
                    position: u,
                    mass: weight,
                }),
            }
        }
        Self::from_validated(atoms)
    }

    /// Midpoint discretization of Lebesgue measure: `m` atoms of mass `1/m`
    /// at `(2i - 1) / 2m`. Within Prokhorov distance `1/(2m)` of Lebesgue.
    pub fn lebesgue(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::input("lebesgue discretization needs m >= 1"));
        }
        let mass = 1.0 / m as f64;
        let atoms = (0..m)
            .map(|i| Atom {
                position: (2 * i + 1) as f64 / (2 * m) as f64,
                mass,
            })
            .collect();
        Ok(Self::from_validated(atoms))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// For a non-negative measure the supremum over sets is the full mass.
    pub fn tv_norm(&self) -> f64 {
        self.total_mass
    }

    pub fn add(&self, other: &Measure) -> Measure {
        let mut atoms = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.atoms.len() || j < other.atoms.len() {
            let next = match (self.atoms.get(i), other.atoms.get(j)) {
                (Some(a), Some(b)) if a.position == b.position => {
                    i += 1;
                    j += 1;
                    Atom {
                        position: a.position,
                        mass: a.mass + b.mass,
                    }
                }
                (Some(a), Some(b)) if a.position < b.position => {
                    i += 1;
                    *a
                }
                (Some(_), Some(b)) | (None, Some(b)) => {
                    j += 1;
                    *b
                }
                (Some(a), None) => {
                    i += 1;
                    *a
                }
                (None, None) => unreachable!(),
            };
            atoms.push(next);
        }
        Measure::from_validated(atoms)
    }

    pub fn scale(&self, c: f64) -> Result<Measure> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::input("scale factor must be finite and non-negative"));
        }
        if c == 0.0 {
            return Ok(Measure::zero());
        }
        Ok(Measure::from_validated(
            self.atoms
                .iter()
                .map(|a| Atom {
                    position: a.position,
                    mass: a.mass * c,
                })
                .collect(),
        ))
    }

    /// `sup_A |mu(A) - nu(A)|`: the larger of the positive and negative parts
    /// of the per-position mass differences.
    pub fn tv_distance(&self, other: &Measure) -> f64 {
        let (mut pos, mut neg) = (0.0, 0.0);
        let (mut i, mut j) = (0, 0);
        while i < self.atoms.len() || j < other.atoms.len() {
            let diff = match (self.atoms.get(i), other.atoms.get(j)) {
                (Some(a), Some(b)) if a.position == b.position => {
                    i += 1;
                    j += 1;
                    a.mass - b.mass
                }
                (Some(a), Some(b)) if a.position < b.position => {
                    i += 1;
                    a.mass
                }
                (Some(_), Some(b)) | (None, Some(b)) => {
                    j += 1;
                    -b.mass
                }
                (Some(a), None) => {
                    i += 1;
                    a.mass
                }
                (None, None) => unreachable!(),
            };
            if diff > 0.0 {
                pos += diff;
            } else {
                neg -= diff;
            }
        }
        f64::max(pos, neg)
    }

    /// Relative entropy against Lebesgue measure. An atomic probability
    /// measure is never absolutely continuous, so the answer is `+inf`.
    pub fn kl_divergence(&self) -> Result<f64> {
        if (self.total_mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::input("kl divergence needs a probability measure"));
        }
        Ok(f64::INFINITY)
    }

    /// `mu(A)` for the closed interval `[lo, hi]`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.position >= lo && a.position <= hi)
            .map(|a| a.mass)
            .sum()
    }

    /// `mu([0, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.position <= x);
        self.atoms[..k].iter().map(|a| a.mass).sum()
    }

    /// Pushes the atoms through `tau`; equal images merge.
    pub fn pushforward(&self, tau: &TauFn) -> LineMeasure {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                position: tau.eval(a.position),
                mass: a.mass,
            })
            .collect();
        let atoms = normalize_atoms(atoms);
        let total_mass = atoms.iter().map(|a| a.mass).sum();
        LineMeasure { atoms, total_mass }
    }
}

/// An atomic measure on the real line, the image of a [`Measure`] under a
/// coupling function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineMeasure {
    atoms: Vec<Atom>,
    total_mass: f64,
}

impl LineMeasure {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn mass_at(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .find(|a| a.position == x)
            .map_or(0.0, |a| a.mass)
    }
}

/// Masses on the equal bins `[(i-1)/m, i/m)`, representing a density
/// with respect to Lebesgue measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    masses: Vec<f64>,
}

impl Histogram {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::input("histogram needs at least one bin"));
        }
        if masses.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
            return Err(Error::input("histogram masses must be finite and non-negative"));
        }
        Ok(Self { masses })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::input("histogram needs at least one bin"));
        }
        Self::new(alloc::vec![1.0 / m as f64; m])
    }

    /// Bins of the cumulative function `cdf` (must satisfy `cdf(0) = 0`).
    pub fn from_cdf(m: usize, cdf: impl Fn(f64) -> f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::input("histogram needs at least one bin"));
        }
        let masses = (0..m)
            .map(|i| cdf((i + 1) as f64 / m as f64) - cdf(i as f64 / m as f64))
            .collect();
        Self::new(masses)
    }

    pub fn bin_count(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.total_mass();
        if t <= 0.0 {
            return Err(Error::input("cannot normalize an empty histogram"));
        }
        Self::new(self.masses.iter().map(|m| m / t).collect())
    }

    /// `sum p_i log(p_i m)`: relative entropy of the piecewise-constant
    /// density against Lebesgue measure. Finite by construction.
    pub fn kl_divergence(&self) -> Result<f64> {
        if (self.total_mass() - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::input("kl divergence needs a normalized histogram"));
        }
        let m = self.bin_count() as f64;
        Ok(self
            .masses
            .iter()
            .map(|&p| if p == 0.0 { 0.0 } else { p * ln(p * m) })
            .sum())
    }

    /// Atoms at the bin midpoints carrying the bin masses.
    pub fn to_measure(&self) -> Measure {
        let m = self.bin_count();
        let atoms = self
            .masses
            .iter()
            .enumerate()
            .map(|(i, &mass)| Atom {
                position: (2 * i + 1) as f64 / (2 * m) as f64,
                mass,
            })
            .collect();
        Measure::from_validated(normalize_atoms(atoms))
    }

    /// Shannon entropy of the bin masses, `-sum p log p`.
    pub fn bin_entropy(&self) -> f64 {
        -self.masses.iter().map(|&p| xlogx(p)).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn m(atoms: &[(f64, f64)]) -> Measure {
        Measure::from_atoms(atoms.iter().copied()).unwrap()
    }

    /// Exhaustive `sup_A |mu(A) - nu(A)|` over subsets of the joint support.
    fn tv_brute(a: &Measure, b: &Measure) -> f64 {
        let mut support: Vec<f64> = a
            .atoms()
            .iter()
            .chain(b.atoms())
            .map(|x| x.position)
            .collect();
        support.sort_by(f64::total_cmp);
        support.dedup();
        let mut best = 0.0f64;
        for mask in 0u32..(1 << support.len()) {
            let pick = |meas: &Measure| -> f64 {
                meas.atoms()
                    .iter()
                    .filter(|x| {
                        let k = support.iter().position(|s| *s == x.position).unwrap();
                        mask & (1 << k) != 0
                    })
                    .map(|x| x.mass)
                    .sum()
            };
            best = best.max((pick(a) - pick(b)).abs());
        }
        best
    }

    #[test]
    fn tv_norm_examples() {
        assert_eq!(Measure::zero().tv_norm(), 0.0);
        assert_eq!(m(&[(0.5, 1.0)]).tv_norm(), 1.0);
        let mu = m(&[(0.1, 3.0), (0.9, 2.0)]);
        assert_eq!(mu.tv_norm(), 5.0);
        assert_eq!(tv_brute(&mu, &Measure::zero()), 5.0);
    }

    #[test]
    fn tv_distance_examples() {
        let d0 = m(&[(0.0, 1.0)]);
        let d1 = m(&[(1.0, 1.0)]);
        assert_eq!(d0.tv_distance(&d0), 0.0);
        assert_eq!(d0.tv_distance(&d1), 1.0);
        assert_eq!(tv_brute(&d0, &d1), 1.0);
        let a = m(&[(0.3, 2.0)]);
        let b = m(&[(0.3, 1.0)]);
        assert_eq!(a.tv_distance(&b), 1.0);
        assert_eq!(tv_brute(&a, &b), 1.0);
    }

    #[test]
    fn tv_distance_matches_subset_scan() {
        let a = m(&[(0.1, 0.5), (0.2, 1.5), (0.7, 0.25)]);
        let b = m(&[(0.2, 0.5), (0.4, 0.75), (0.7, 1.0)]);
        assert!((a.tv_distance(&b) - tv_brute(&a, &b)).abs() < 1e-15);
    }

    #[test]
    fn add_and_scale() {
        let a = m(&[(0.2, 1.0)]);
        assert_eq!(a.add(&a), m(&[(0.2, 2.0)]));
        assert_eq!(m(&[(0.1, 3.0)]).scale(1.0 / 3.0).unwrap(), m(&[(0.1, 1.0)]));
        assert_eq!(m(&[(0.1, 1.0)]).add(&m(&[(0.4, 1.0)])).total_mass(), 2.0);
        assert!(a.scale(0.0).unwrap().is_empty());
        assert!(a.scale(-1.0).is_err());
    }

    #[test]
    fn construction_merges_and_drops_zero() {
        let mu = m(&[(0.5, 1.0), (0.2, 0.0), (0.5, 2.0), (0.1, 1.0)]);
        assert_eq!(mu.atoms().len(), 2);
        assert_eq!(mu.atoms()[0].position, 0.1);
        assert_eq!(mu.atoms()[1].mass, 3.0);
        assert!(Measure::from_atoms([(1.5, 1.0)]).is_err());
        assert!(Measure::from_atoms([(0.5, -1.0)]).is_err());
    }

    #[test]
    fn empirical_examples() {
        assert!(Measure::empirical(&[]).unwrap().is_empty());
        assert_eq!(Measure::empirical(&[0.5, 0.5]).unwrap(), m(&[(0.5, 2.0)]));
        assert_eq!(
            Measure::empirical(&[0.1, 0.9, 0.1]).unwrap(),
            m(&[(0.1, 2.0), (0.9, 1.0)])
        );
        assert!(Measure::empirical(&[0.2, 1.01]).is_err());
    }

    #[test]
    fn kl_examples() {
        for bins in [1, 2, 7, 64] {
            assert!(Histogram::uniform(bins).unwrap().kl_divergence().unwrap().abs() < 1e-15);
        }
        // mass 1 spread evenly over [0, 1/2]
        let half = Histogram::new(vec![0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((half.kl_divergence().unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(m(&[(0.5, 1.0)]).kl_divergence().unwrap(), f64::INFINITY);
        assert!(Histogram::new(vec![0.5, 0.2]).unwrap().kl_divergence().is_err());
        assert!(m(&[(0.5, 2.0)]).kl_divergence().is_err());
    }

    #[test]
    fn triangular_kl_approaches_closed_form() {
        let tri = Histogram::from_cdf(256, |x| x * x).unwrap();
        let exact = core::f64::consts::LN_2 - 0.5;
        assert!((tri.kl_divergence().unwrap() - exact).abs() < 1e-4);
    }

    #[test]
    fn lebesgue_midpoints() {
        assert_eq!(Measure::lebesgue(1).unwrap(), m(&[(0.5, 1.0)]));
        assert_eq!(Measure::lebesgue(2).unwrap(), m(&[(0.25, 0.5), (0.75, 0.5)]));
        assert!(Measure::lebesgue(0).is_err());
    }

    #[test]
    fn pushforward_examples() {
        let mu = m(&[(0.1, 1.0), (0.6, 2.5)]);
        let image = mu.pushforward(&TauFn::zero());
        assert_eq!(image.atoms().len(), 1);
        assert_eq!(image.mass_at(0.0), 3.5);

        let lam = Measure::lebesgue(10).unwrap();
        let image = lam.pushforward(&TauFn::indicator_from(0.33));
        // midpoints 0.05, 0.15, 0.25 fall below 0.33
        assert!((image.mass_at(0.0) - 0.3).abs() < 1e-12);
        assert!((image.mass_at(1.0) - 0.7).abs() < 1e-12);

        let lam = Measure::lebesgue(16).unwrap();
        let image = lam.pushforward(&TauFn::identity_ladder(16).unwrap());
        assert_eq!(image.atoms(), lam.atoms());
    }
}
