use serde::{Deserialize, Serialize};

use super::estimate::Estimate;
use crate::error::{invalid, Error, Result};
use crate::lhs::{critical_p_with, LhsOptions};
use crate::measurements::MeasurementSet;
use crate::quantum::SteeringEstimate;

#[derive(Clone, Debug, Default)]
pub struct VerdictOptions {
    /// Evaluate the threshold at `epsilon_hat - std_error`.
    pub conservative: bool,
    pub lhs: LhsOptions,
}

/// Outcome of the steering test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub s_n: SteeringEstimate,
    pub epsilon_hat: Estimate,
    /// Efficiency at which the threshold was evaluated.
    pub epsilon_used: f64,
    pub p_star_at_epsilon: f64,
    /// Half the spread of the threshold across `epsilon_hat +- std_error`.
    pub p_star_std_error: f64,
    pub combined_std_error: f64,
    pub passed: bool,
    /// `(s_n - p_star) / combined_std_error`.
    pub margin: f64,
    pub conservative: bool,
}

pub fn verdict(s_n: &SteeringEstimate, epsilon_hat: Estimate, n: usize, settings: &MeasurementSet) -> Result<TestVerdict> {
    verdict_with(s_n, epsilon_hat, n, settings, &VerdictOptions::default())
}

pub fn verdict_with(
    s_n: &SteeringEstimate,
    epsilon_hat: Estimate,
    n: usize,
    settings: &MeasurementSet,
    options: &VerdictOptions,
) -> Result<TestVerdict> {
    let eps = epsilon_hat.value;
    if !(eps > 0.0 && eps <= 1.0) {
        return invalid(format!("epsilon_hat must lie in (0,1], got {eps}"));
    }
    if settings.len() != n || s_n.n != n {
        return invalid(format!("n = {n}, settings have {}, estimate has {}", settings.len(), s_n.n));
    }
    let threshold = |e: f64| -> Result<f64> {
        critical_p_with(e.clamp(1e-9, 1.0), settings, &options.lhs)
            .map(|pt| pt.p_star)
            .map_err(|err| Error::VerdictUnavailable(err.to_string()))
    };
    let se = epsilon_hat.std_error.max(0.0);
    let used = if options.conservative { (eps - se).max(1e-9) } else { eps };
    let p_star = threshold(used)?;
    let spread = if se > 0.0 { 0.5 * (threshold(eps - se)? - threshold(eps + se)?).abs() } else { 0.0 };
    let combined = (s_n.std_error.powi(2) + spread * spread).sqrt();
    let diff = s_n.value - p_star;
    let margin = if combined > 0.0 {
        diff / combined
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(TestVerdict {
        s_n: s_n.clone(),
        epsilon_hat,
        epsilon_used: used,
        p_star_at_epsilon: p_star,
        p_star_std_error: spread,
        combined_std_error: combined,
        passed: s_n.value > p_star,
        margin,
        conservative: options.conservative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurements::phase_encoding_set;

    fn s(v: f64) -> SteeringEstimate {
        SteeringEstimate::from_correlators(vec![v; 9], vec![0.01; 9])
    }

    #[test]
    fn threshold_examples() {
        let set = phase_encoding_set(9).unwrap();
        let eps = Estimate { value: 0.219, std_error: 0.002 };
        let v = verdict(&s(0.99), eps, 9, &set).unwrap();
        assert!(v.passed && v.margin > 3.0);
        // the threshold near this efficiency sits just above 0.97
        assert!((v.p_star_at_epsilon - 0.9715).abs() < 2e-3, "{}", v.p_star_at_epsilon);
        assert!(!verdict(&s(0.95), eps, 9, &set).unwrap().passed);
        assert!(!verdict(&s(0.3), eps, 9, &set).unwrap().passed);
        let low = verdict(&s(0.999), Estimate { value: 0.10, std_error: 0.0 }, 9, &set).unwrap();
        assert_eq!(low.p_star_at_epsilon, 1.0);
        assert!(!low.passed);
        assert!(verdict(&s(0.9), Estimate { value: 0.0, std_error: 0.0 }, 9, &set).is_err());
    }

    #[test]
    fn conservative_threshold_is_higher() {
        let set = phase_encoding_set(6).unwrap();
        let eps = Estimate { value: 0.3, std_error: 0.02 };
        let est = SteeringEstimate::from_correlators(vec![0.9; 6], vec![0.01; 6]);
        let plain = verdict(&est, eps, 6, &set).unwrap();
        let opts = VerdictOptions { conservative: true, ..Default::default() };
        let cons = verdict_with(&est, eps, 6, &set, &opts).unwrap();
        assert!(cons.p_star_at_epsilon > plain.p_star_at_epsilon);
        assert!(plain.p_star_std_error > 0.0);
    }
}
