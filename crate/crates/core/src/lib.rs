//! Simulation and exact computation for the facilitated exclusion process, the
//! constant-rate zero-range process and the mapping between them.

pub mod dynamics;
pub mod ensembles;
pub mod error;
pub mod fluctuations;
pub mod harness;
pub mod lattice;
pub mod mapping;
pub mod measures;
pub mod seed;
pub mod special;

pub use error::{FepError, Result};
