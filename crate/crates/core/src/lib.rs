//! Quasipotentials, Green's functions and large-deviation diagnostics for
//! transient random walks on the integer lattice.

pub mod cgf;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod green;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod quasipotential;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
