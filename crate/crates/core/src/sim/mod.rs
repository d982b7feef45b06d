//! Simulation of the time-bin steering experiment and the analysis chain
//! from coincidence histograms to a verdict.

mod calibrate;
mod config;
mod estimate;
mod histogram;
mod run;
mod verdict;

pub use calibrate::{calibrate_phase, calibrate_phase_with, Calibration, CalibrationOptions};
pub use config::{alice_loss_ledger, bob_loss_ledger, ledger_efficiency, total_efficiency, ExperimentConfig, LossComponent};
pub use estimate::{estimate_klyshko, estimate_steering, klyshko_from_counts, Estimate, KlyshkoEstimate};
pub use histogram::{Detector, HistogramSet, OutputPair, BINS};
pub use run::simulate_run;
pub use verdict::{verdict, verdict_with, TestVerdict, VerdictOptions};
