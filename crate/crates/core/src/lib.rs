//! First-passage-time model checking for population continuous-time Markov
//! chains.
//!
//! A time-bounded until property `phi1 U[0,t] phi2` is checked by filtering a
//! Gaussian approximation of the process forward in time: normal moment
//! closure propagates mean and covariance between grid points, and at each
//! point the mass in the target region is recorded while the undetermined
//! region is conditioned on by assumed density filtering. Gillespie
//! simulation and an exact master-equation solver serve as references.

pub mod engine;
pub mod error;
pub mod gaussian;
mod lexer;
pub mod model;
pub mod moments;
pub mod output;
pub mod property;
pub mod ssa;

pub use error::{Error, Result};
