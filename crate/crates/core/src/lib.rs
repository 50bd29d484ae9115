//! Restricted path-integral propagator of a continuously position-monitored
//! charged particle in a Paul trap, and the probabilities of candidate
//! measurement records.
//!
//! The pipeline runs trap constants → effective complex frequency
//! ([`trapmodel`]) → classical solution and fluctuation prefactor
//! ([`propagator`]) → log-probabilities of records ([`probability`]).  The
//! [`oracle`] module evaluates the same propagator by brute-force time slicing
//! and is the reference every pipeline result is checked against.

pub mod cli;
pub mod error;
pub mod mathieu;
pub mod ode;
pub mod oracle;
pub mod probability;
pub mod propagator;
pub mod quad;
pub mod records;
pub mod scenario;
pub mod trapmodel;

pub use error::{Error, Result};
