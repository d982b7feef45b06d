use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::estimate::estimate_steering;
use super::run::simulate_run;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Recovered interferometer phase offset, radians in `(-pi, pi]`.
    pub phase_offset: f64,
    /// Recovered slip of Alice's schedule, in slots.
    pub schedule_slip: usize,
    /// Compensation phase at the half-correlation point.
    pub compensation: f64,
    /// `S_n` for each trial slip.
    pub slip_scores: Vec<f64>,
    pub runs: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct CalibrationOptions {
    /// Width of the final compensation bracket, radians.
    pub phase_tol: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions { phase_tol: 2e-3 }
    }
}

pub fn calibrate_phase(config: &ExperimentConfig) -> Result<Calibration> {
    calibrate_phase_with(config, &CalibrationOptions::default())
}

/// Two-stage calibration on the simulator.
///
/// Stage one runs the complementary pair {time, phase} and bisects the
/// compensation phase until the phase correlator vanishes, i.e. until the
/// two-setting parameter sits at half the time-basis correlator (0.5 for
/// a perfect source). Stage two scans the schedule slip and keeps the one
/// maximizing `S_n`.
pub fn calibrate_phase_with(config: &ExperimentConfig, options: &CalibrationOptions) -> Result<Calibration> {
    config.validate()?;
    let mut runs = 0;
    let pair = ExperimentConfig { n_settings: 2, schedule_slip: 0, slip_compensation: 0, ..config.clone() };
    let mut phase_term = |c: f64| -> Result<f64> {
        runs += 1;
        let h = simulate_run(&ExperimentConfig { phase_compensation: c, ..pair.clone() })?;
        let s = estimate_steering(&h, 2).map_err(|e| Error::CalibrationFailure(e.to_string()))?;
        Ok(s.per_setting[1])
    };
    let (mut lo, mut hi) = (0.0, PI);
    let (f_lo, f_hi) = (phase_term(lo)?, phase_term(hi)?);
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::CalibrationFailure(format!(
            "half-correlation point not bracketed: phase correlator {f_lo:.3} at 0 and {f_hi:.3} at pi"
        )));
    }
    while hi - lo > options.phase_tol {
        let mid = 0.5 * (lo + hi);
        if phase_term(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let compensation = 0.5 * (lo + hi);
    let mut offset = FRAC_PI_2 - compensation;
    if offset <= -PI {
        offset += 2.0 * PI;
    }

    let n = config.n_settings;
    let mut slip_scores = Vec::with_capacity(n);
    for d in 0..n {
        let trial = ExperimentConfig { phase_compensation: -offset, slip_compensation: d, ..config.clone() };
        let h = simulate_run(&trial)?;
        runs += 1;
        let s = estimate_steering(&h, n).map_err(|e| Error::CalibrationFailure(e.to_string()))?;
        slip_scores.push(s.value);
    }
    let schedule_slip = slip_scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(d, _)| d)
        .unwrap_or(0);
    Ok(Calibration { phase_offset: offset, schedule_slip, compensation, slip_scores, runs })
}
