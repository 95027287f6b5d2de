//! Numerical laboratory for the linearized Vlasov-Poisson-Fokker-Planck
//! equation in one space dimension.
//!
//! The crate computes the Poisson-Boltzmann steady state, builds a
//! Hermite-in-velocity discretization of the kinetic operators, certifies
//! hypocoercive decay rates from the abstract constants, and measures the
//! actual decay by direct simulation.

pub mod discretization;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod macro_ops;
pub mod potential;
pub mod rates;
pub mod steady_state;

pub use error::{Error, Result};
