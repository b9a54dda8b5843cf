//! Aldous chain on binary cladograms.
//!
//! Trees are finite binary cladograms with the uniform measure on leaves. The
//! crate covers the chain itself, shape and mass polynomials with their
//! generators, and the statistics of uniform cladograms (the finite-N
//! Brownian CRT).
//!
//! Masses are carried as integer leaf counts; floating point appears only
//! at observable boundaries.

pub mod chain;
pub mod crt_stats;
mod error;
pub mod mass_poly;
pub mod rng;
pub mod shape_poly;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};

/// Exact rational used for masses, atoms of the branch point distribution and
/// the intrinsic metric. Denominators stay at most `2 N^5`.
pub type Rational = num_rational::Ratio<i128>;

pub use chain::{aldous_move, enumerate_moves, rate_matrix, simulate, spectral_gap, Move};
pub use tree::{
    branch_point, component_mass, count_cladograms, enumerate_cladograms, nu_atom, r_mu, shape,
    total_length, uniform_cladogram, validate_cladogram, Cladogram, LabelledShape, Topology,
    Vertex,
};
