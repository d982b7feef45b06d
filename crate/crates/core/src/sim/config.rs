use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One entry of a loss budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossComponent {
    pub name: String,
    pub db: f64,
}

impl LossComponent {
    pub fn new(name: &str, db: f64) -> Self {
        LossComponent { name: name.to_owned(), db }
    }
}

/// Alice's measured losses: 6.6 dB in total.
pub fn alice_loss_ledger() -> Vec<LossComponent> {
    vec![
        LossComponent::new("on-chip", 2.0),
        LossComponent::new("chip-fiber coupling", 1.5),
        LossComponent::new("DWDM", 1.0),
        LossComponent::new("transmission", 0.1),
        LossComponent::new("AMZI", 1.0),
        LossComponent::new("filtering", 0.5),
        LossComponent::new("SNSPD", 0.5),
    ]
}

/// Bob's arm: Alice's components plus a 3 dB phase modulator. Not a
/// measured budget, only a plausible default.
pub fn bob_loss_ledger() -> Vec<LossComponent> {
    let mut l = alice_loss_ledger();
    l.push(LossComponent::new("phase modulator", 3.0));
    l
}

/// `10^(-sum dB / 10)`.
pub fn total_efficiency(ledger_db: &[f64]) -> Result<f64> {
    if let Some(bad) = ledger_db.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
        return Err(Error::InvalidArgument(format!("loss entries must be finite and >= 0 dB, got {bad}")));
    }
    Ok(10f64.powf(-ledger_db.iter().sum::<f64>() / 10.0))
}

pub fn ledger_efficiency(ledger: &[LossComponent]) -> Result<f64> {
    total_efficiency(&ledger.iter().map(|c| c.db).collect::<Vec<_>>())
}

/// Parameters of one simulated acquisition. Every field has a default, so a
/// JSON document only needs the fields it changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_settings: usize,
    /// Pulses per second.
    pub rep_rate: f64,
    /// Mean number of pairs per pulse.
    pub pair_prob: f64,
    /// Isotropic fraction of the source.
    pub p: f64,
    pub alice_loss_db: Vec<LossComponent>,
    pub bob_loss_db: Vec<LossComponent>,
    pub visibility: f64,
    /// Per detector.
    pub dark_rate_hz: f64,
    pub bin_width_s: f64,
    /// Interferometer differential delay; one pulse period.
    pub delay_s: f64,
    pub duration_s: f64,
    pub seed: u64,
    /// Random-walk phase noise, radians per sqrt(second).
    pub phase_drift_sigma: f64,
    /// Unknown phase offset of the interferometer pair, radians.
    pub phase_offset: f64,
    /// Unknown slip of Alice's setting schedule, in pulse slots.
    pub schedule_slip: usize,
    /// Phase added on Alice's modulator to undo `phase_offset`.
    pub phase_compensation: f64,
    /// Slots by which Alice's schedule is shifted back.
    pub slip_compensation: usize,
    /// Frame offset of the off-peak window used to count accidentals.
    pub accidental_offset: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_settings: 9,
            rep_rate: 2.5e9,
            pair_prob: 1e-3,
            p: 1.0,
            alice_loss_db: alice_loss_ledger(),
            bob_loss_db: bob_loss_ledger(),
            visibility: 0.985,
            dark_rate_hz: 100.0,
            bin_width_s: 400e-12,
            delay_s: 400e-12,
            duration_s: 1.0,
            seed: 1,
            phase_drift_sigma: 0.0,
            phase_offset: 0.0,
            schedule_slip: 0,
            phase_compensation: 0.0,
            slip_compensation: 0,
            accidental_offset: 16,
        }
    }
}

fn field<T>(name: &str, msg: impl std::fmt::Display) -> Result<T> {
    Err(Error::InvalidArgument(format!("config field `{name}`: {msg}")))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_settings < 2 {
            return field("n_settings", format!("need at least 2 settings, got {}", self.n_settings));
        }
        if !(self.rep_rate > 0.0 && self.rep_rate.is_finite()) {
            return field("rep_rate", "must be positive");
        }
        if !(0.0..=0.1).contains(&self.pair_prob) {
            return field("pair_prob", format!("must lie in [0, 0.1], got {}", self.pair_prob));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return field("p", format!("must lie in [0, 1], got {}", self.p));
        }
        for (name, ledger) in [("alice_loss_db", &self.alice_loss_db), ("bob_loss_db", &self.bob_loss_db)] {
            if let Some(c) = ledger.iter().find(|c| !(c.db >= 0.0 && c.db.is_finite())) {
                return field(name, format!("component `{}` has loss {} dB; losses must be >= 0", c.name, c.db));
            }
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return field("visibility", format!("must lie in [0, 1], got {}", self.visibility));
        }
        if !(self.dark_rate_hz >= 0.0 && self.dark_rate_hz < self.rep_rate) {
            return field("dark_rate_hz", "must be >= 0 and below the pulse rate");
        }
        if !(self.delay_s > 0.0) || (self.rep_rate * self.delay_s - 1.0).abs() > 1e-6 {
            return field("delay_s", format!("must equal 1/rep_rate = {:e} s", 1.0 / self.rep_rate));
        }
        if !(self.bin_width_s > 0.0 && self.bin_width_s <= self.delay_s * (1.0 + 1e-9)) {
            return field("bin_width_s", "must be positive and no wider than delay_s");
        }
        if !(self.duration_s > 0.0) || self.duration_s * self.rep_rate > 1e15 {
            return field("duration_s", "must be positive and span at most 1e15 pulses");
        }
        if !(self.phase_drift_sigma >= 0.0 && self.phase_drift_sigma.is_finite()) {
            return field("phase_drift_sigma", "must be >= 0");
        }
        if !self.phase_offset.is_finite() {
            return field("phase_offset", "must be finite");
        }
        if !self.phase_compensation.is_finite() {
            return field("phase_compensation", "must be finite");
        }
        if self.accidental_offset < 2 {
            return field("accidental_offset", "must be at least 2 frames");
        }
        Ok(())
    }

    pub fn alice_efficiency(&self) -> Result<f64> {
        ledger_efficiency(&self.alice_loss_db)
    }

    pub fn bob_efficiency(&self) -> Result<f64> {
        ledger_efficiency(&self.bob_loss_db)
    }

    pub fn frames(&self) -> u64 {
        (self.duration_s * self.rep_rate).round() as u64
    }

    /// Parses and validates a JSON document. Errors name the offending
    /// field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::InvalidArgument(format!("config field `{path}`: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_arithmetic() {
        let a = ledger_efficiency(&alice_loss_ledger()).unwrap();
        assert!((a - 0.2188).abs() < 1e-4);
        assert_eq!(total_efficiency(&[]).unwrap(), 1.0);
        assert!((total_efficiency(&[3.0]).unwrap() - 0.5012).abs() < 1e-4);
        assert!(total_efficiency(&[1.0, -0.5]).is_err());
    }

    #[test]
    fn json_defaults_and_field_errors() {
        let cfg = ExperimentConfig::from_json(r#"{"n_settings": 6, "seed": 7}"#).unwrap();
        assert_eq!(cfg.n_settings, 6);
        assert_eq!(cfg.visibility, 0.985);
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);

        let err = ExperimentConfig::from_json(r#"{"visibility": "high"}"#).unwrap_err().to_string();
        assert!(err.contains("visibility"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"alice_loss_db": [{"name": "x", "db": -1}]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("alice_loss_db"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"colour": 1}"#).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"delay_s": 1e-9}"#).unwrap_err().to_string();
        assert!(err.contains("delay_s"), "{err}");
    }
}
