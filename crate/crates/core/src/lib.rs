//! Computational engine for the Hecke pair PSL₂(ℤ) ⊂ PSL₂(ℤ[1/p]).
//!
//! The crate is organized in two layers.  An exact layer (arbitrary-precision
//! integer matrices, coset combinatorics, the double-coset Hecke algebra) where
//! every identity is checked with exact arithmetic, and a numerical layer
//! (radial spectral model on the (p+1)-regular tree, weight-13 discrete-series
//! matrix coefficients, truncated group-algebra realizations of the completely
//! positive Hecke maps, lattice counting and displacement volumes) where every
//! estimate is reported together with an a-priori error budget.

pub mod classical;
pub mod cosets;
pub mod dseries;
pub mod geom;
pub mod hecke;
pub mod opmodel;
pub mod projmat;
pub mod quad;
pub mod radial;

pub use projmat::{ProjMat, SignedMat};
