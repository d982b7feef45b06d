//! Detection-loophole-free quantum steering with phase-encoded time-bin
//! measurements.
//!
//! * [`quantum`]: two-qubit algebra, isotropic states, correlators.
//! * [`measurements`]: phase-encoding and Platonic-solid measurement sets.
//! * [`lhs`]: loss-counted local-hidden-state models, critical thresholds
//!   and dual certificates.
//! * [`sim`]: Monte-Carlo simulation of the time-bin experiment, estimators
//!   and the final steering verdict.
//! * [`cli`]: the `tbsteer` command-line front end.

pub mod cli;
pub mod error;
pub mod lhs;
pub mod measurements;
pub mod quantum;
pub mod sim;

pub use error::{Error, Result};
