//! Monotone Markov chains on the composition lattice.
//!
//! The crate covers the multi-allele Moran model, three sequential Pólya urn
//! variants and a generalized Ehrenfest urn. For each chain it provides exact
//! transition rows and samplers ([`kernels`]), a linear monotone eigenfunction
//! ([`spectral`]), nonasymptotic total-variation bounds from any starting
//! state ([`bounds`]), explicit order-preserving couplings ([`coupling`]), and
//! a dense engine that checks all of it on small lattices ([`exact`]).

pub mod bounds;
pub mod coupling;
pub mod error;
pub mod exact;
mod graph;
pub mod kernels;
pub mod numfmt;
pub mod random_models;
pub mod spectral;
pub mod statespace;

pub use error::{Error, Result};
pub use kernels::{ModelSpec, MutationMatrix, PolyaOrder, TransitionRow};
pub use statespace::{Composition, StateIndex, StateSpace};
