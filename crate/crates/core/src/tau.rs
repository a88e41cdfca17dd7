//! Step functions coupling edge labels to edge weights.

use alloc::vec::Vec;

use crate::{Error, Result};

pub const MAX_CELLS: usize = 64;

/// A bounded, right-continuous step function on `[0, 1]`.
///
/// `breakpoints` split `[0, 1]` into `breakpoints.len() + 1` cells
/// `[0, b_1), [b_1, b_2), ..., [b_k, 1]`, and cell `i` carries `values[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TauFn {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    bound: f64,
}

impl TauFn {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::input("tau needs exactly one value per cell"));
        }
        if values.len() > MAX_CELLS {
            return Err(Error::input("tau is limited to 64 cells"));
        }
        if breakpoints.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
            return Err(Error::input("tau breakpoints must lie strictly inside (0, 1)"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("tau breakpoints must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("tau values must be finite"));
        }
        let bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self {
            breakpoints,
            values,
            bound,
        })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Vec::new(), alloc::vec![c]).expect("finite constant")
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `1` on `[p, 1]`, `0` below. `p` at either end degenerates to a constant.
    pub fn indicator_from(p: f64) -> Self {
        if p <= 0.0 {
            Self::constant(1.0)
        } else if p >= 1.0 {
            Self::constant(0.0)
        } else {
            Self::new(alloc::vec![p], alloc::vec![0.0, 1.0]).expect("valid indicator")
        }
    }

    /// Equal cells `[i/m, (i+1)/m)` with arbitrary values.
    pub fn uniform_cells(values: Vec<f64>) -> Result<Self> {
        let m = values.len();
        if m == 0 {
            return Err(Error::input("tau needs at least one cell"));
        }
        let breakpoints = (1..m).map(|i| i as f64 / m as f64).collect();
        Self::new(breakpoints, values)
    }

    /// Staircase approximation of `u -> u`: cell `i` of `m` takes its midpoint.
    pub fn identity_ladder(m: usize) -> Result<Self> {
        let values = (0..m).map(|i| (2 * i + 1) as f64 / (2 * m) as f64).collect();
        Self::uniform_cells(values)
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        let cell = self.breakpoints.partition_point(|&b| b <= u);
        self.values[cell]
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.breakpoints.clone(), values)
    }

    /// FNV-1a over the bit patterns, used to tag persisted tables.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in self.breakpoints.iter().chain(self.values.iter()) {
            for byte in x.to_bits().to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h ^ self.values.len() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn right_continuous_cells() {
        let t = TauFn::new(vec![0.25, 0.5], vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(t.eval(0.0), -1.0);
        assert_eq!(t.eval(0.2499), -1.0);
        assert_eq!(t.eval(0.25), 0.0);
        assert_eq!(t.eval(0.5), 2.0);
        assert_eq!(t.eval(1.0), 2.0);
        assert_eq!(t.bound(), 2.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(TauFn::new(vec![0.5], vec![1.0]).is_err());
        assert!(TauFn::new(vec![0.5, 0.2], vec![1.0, 2.0, 3.0]).is_err());
        assert!(TauFn::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(TauFn::uniform_cells(vec![0.0; 65]).is_err());
        assert!(TauFn::uniform_cells(vec![0.0; 64]).is_ok());
    }

    #[test]
    fn identity_ladder_hits_midpoints() {
        let t = TauFn::identity_ladder(4).unwrap();
        assert_eq!(t.eval(0.1), 0.125);
        assert_eq!(t.eval(0.3), 0.375);
        assert_eq!(t.eval(0.99), 0.875);
    }

    #[test]
    fn indicator_degenerates() {
        assert!(TauFn::indicator_from(0.0).is_constant());
        assert_eq!(TauFn::indicator_from(0.5).eval(0.5), 1.0);
        assert_eq!(TauFn::indicator_from(0.5).eval(0.49), 0.0);
    }
}
