//! Non-equilibrium steady states of a bosonic mode coupled to bosonic reservoirs.
//!
//! The crate evaluates reservoir spectral densities, the self-energy `η`, the
//! quasi-free steady-state functional, particle/energy/Josephson currents and the
//! entropy production rate, and checks the analytic time evolution against a
//! finite truncation of the one-particle Hamiltonian.

pub mod cli;
pub mod config;
pub mod error;
pub mod graphs;
pub mod model;
pub mod ness;
pub mod oracle;
pub mod quad;
pub mod selfenergy;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
