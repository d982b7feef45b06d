use serde::{Deserialize, Serialize};

use super::histogram::{HistogramSet, OutputPair};
use crate::error::{invalid, Error, Result};
use crate::quantum::SteeringEstimate;

/// A value with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Heralding efficiencies of both arms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlyshkoEstimate {
    pub alice: Estimate,
    pub bob: Estimate,
    pub coincidences: u64,
    pub accidentals: f64,
}

/// `(coincidences - accidentals) / opposite_singles`, with binomial and
/// Poisson-background errors.
pub fn klyshko_from_counts(coincidences: u64, accidentals: f64, opposite_singles: u64) -> Result<Estimate> {
    if opposite_singles == 0 {
        return Err(Error::UndefinedEstimate("no singles on the opposite arm".into()));
    }
    if !(accidentals >= 0.0) {
        return invalid(format!("accidental count must be >= 0, got {accidentals}"));
    }
    let s = opposite_singles as f64;
    let eta = (coincidences as f64 - accidentals) / s;
    let var = (eta * (1.0 - eta)).max(0.0) / s + accidentals / (s * s);
    Ok(Estimate { value: eta, std_error: var.sqrt().max(1.0 / s) })
}

/// Klyshko efficiencies from all coincidences, after subtracting the
/// off-peak accidental count.
pub fn estimate_klyshko(hist: &HistogramSet) -> Result<KlyshkoEstimate> {
    let c = hist.total_coincidences();
    let acc = hist.offpeak() as f64;
    let alice = klyshko_from_counts(c, acc, hist.bob_singles())
        .map_err(|_| Error::UndefinedEstimate("Bob recorded no singles".into()))?;
    let bob = klyshko_from_counts(c, acc, hist.alice_singles())
        .map_err(|_| Error::UndefinedEstimate("Alice recorded no singles".into()))?;
    Ok(KlyshkoEstimate { alice, bob, coincidences: c, accidentals: acc })
}

fn correlator(positive: u64, total: u64) -> (f64, f64) {
    let n = total as f64;
    let e = (2.0 * positive as f64 - n) / n;
    (e, ((1.0 - e * e).max(0.0) / n).sqrt())
}

/// Steering parameter from the histograms.
///
/// The time-basis term compares side-peak coincidences (equal arrival
/// slots) with the adjacent bins (opposite slots), pooled over all
/// settings. Phase terms use the central peak at their own setting.
pub fn estimate_steering(hist: &HistogramSet, n: usize) -> Result<SteeringEstimate> {
    if n != hist.n_settings() {
        return invalid(format!("histograms cover {} settings, asked for {n}", hist.n_settings()));
    }
    let side = hist.bin_total(-1) + hist.bin_total(1);
    let adjacent = hist.bin_total(-2) + hist.bin_total(2);
    if side + adjacent == 0 {
        return Err(Error::UndefinedEstimate("setting 0 (time basis) has no side-peak or adjacent coincidences".into()));
    }
    let mut per = vec![correlator(side, side + adjacent)];
    for k in 1..n {
        let mut pos = 0;
        let mut total = 0;
        for pair in OutputPair::ALL {
            let c = hist.count(pair, k, 0);
            total += c;
            if pair.parity() > 0.0 {
                pos += c;
            }
        }
        if total == 0 {
            return Err(Error::UndefinedEstimate(format!("setting {k} has no central-peak coincidences")));
        }
        per.push(correlator(pos, total));
    }
    let (values, errors) = per.into_iter().unzip();
    Ok(SteeringEstimate::from_correlators(values, errors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn klyshko_definition() {
        let e = klyshko_from_counts(1000, 0.0, 10_000).unwrap();
        assert!((e.value - 0.1).abs() < 1e-15);
        let z = klyshko_from_counts(0, 0.0, 500).unwrap();
        assert_eq!(z.value, 0.0);
        assert!(z.std_error > 0.0 && z.std_error.is_finite());
        assert!(matches!(klyshko_from_counts(5, 0.0, 0), Err(Error::UndefinedEstimate(_))));
    }

    #[test]
    fn empty_histograms_are_undefined() {
        let h = HistogramSet::new(3);
        assert!(matches!(estimate_steering(&h, 3), Err(Error::UndefinedEstimate(_))));
        assert!(estimate_steering(&h, 4).is_err());
        assert!(matches!(estimate_klyshko(&h), Err(Error::UndefinedEstimate(_))));
    }

    #[test]
    fn missing_phase_setting_is_named() {
        let mut h = HistogramSet::new(3);
        h.add_coincidence(OutputPair::PlusPlus, 0, Some(1));
        h.add_coincidence(OutputPair::PlusPlus, 1, Some(0));
        let err = estimate_steering(&h, 3).unwrap_err().to_string();
        assert!(err.contains("setting 2"), "{err}");
    }
}
