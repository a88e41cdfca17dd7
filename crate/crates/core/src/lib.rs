//! Grid entropy of directed lattice paths.
//!
//! Finite non-negative measures on `[0, 1]`, the Lévy–Prokhorov metric between
//! atomic measures, NE-path ensembles on `Z^D` labelled by a hashed uniform
//! environment, and the three routes to the entropy of paths whose normalized
//! empirical measure approaches a target: order statistics of Prokhorov
//! distances, exponential cost sums, and the negative convex conjugate of the
//! polymer free energy.
//!
//! The crate is `no_std` and only needs `alloc`. IO, configuration and file
//! formats live in the `grid-entropy` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
pub mod math;

pub mod environment;
pub mod estimators;
pub mod lattice;
pub mod measure;
pub mod polymer;
pub mod prokhorov;
pub mod tau;
pub mod variational;

pub use environment::{CounterRng, Environment};
pub use error::{Error, Result};
pub use lattice::{path_count, shannon_entropy, Direction, LatticePoint, Path, PathEnumerator};
pub use measure::{Atom, Histogram, LineMeasure, Measure};
pub use prokhorov::{prokhorov_brute, prokhorov_distance, prokhorov_distance_with};
pub use tau::TauFn;
