//! Simulation and analysis of spin squeezing and GHZ-state generation in
//! dipolar-coupled spin-1/2 ensembles.
//!
//! Units: ħ = 1, energies in rad/μs, times in μs, lengths in nm.

pub mod constants;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod hamiltonians;
pub mod linalg;
pub mod magnetometry;
pub mod noise;
pub mod optimize;
pub mod propagators;
pub mod registry;
pub mod sequences;
pub mod spin_ops;
pub mod squeezing;

pub use error::{Error, Result};
pub use spin_ops::{Basis, OperatorMatrix, SpinAxis, StateVector};
