use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Largest number of settings for which strategies may be enumerated.
pub const MAX_STRATEGY_SETTINGS: usize = 12;

/// One announced outcome of the steering party.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
    #[serde(rename = "null")]
    Null,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Plus, Outcome::Minus, Outcome::Null];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Outcome {
        Self::ALL[i]
    }

    /// `+1`, `-1`, or `None` for a null report.
    pub fn sign(self) -> Option<f64> {
        match self {
            Outcome::Plus => Some(1.0),
            Outcome::Minus => Some(-1.0),
            Outcome::Null => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+",
            Outcome::Minus => "-",
            Outcome::Null => "0",
        })
    }
}

/// A deterministic response function: one outcome per setting.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub responses: Vec<Outcome>,
}

impl DeterministicStrategy {
    /// The strategy at position `index` of the lexicographic enumeration
    /// (first setting most significant, `+1 < -1 < null`).
    pub fn from_index(index: usize, n: usize) -> Self {
        DeterministicStrategy { responses: digits(index, n).map(Outcome::from_index).collect() }
    }

    pub fn index(&self) -> usize {
        self.responses.iter().fold(0, |acc, o| acc * 3 + o.index())
    }

    pub fn n(&self) -> usize {
        self.responses.len()
    }

    pub fn is_null_free(&self) -> bool {
        !self.responses.contains(&Outcome::Null)
    }
}

impl fmt::Display for DeterministicStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.responses {
            write!(f, "{o}")?;
        }
        Ok(())
    }
}

/// Base-3 digits of `index`, most significant first.
pub(crate) fn digits(index: usize, n: usize) -> impl Iterator<Item = usize> {
    (0..n).map(move |k| (index / 3usize.pow((n - 1 - k) as u32)) % 3)
}

pub(crate) fn check_strategy_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_STRATEGY_SETTINGS {
        return invalid(format!(
            "strategy enumeration supports 1 <= n <= {MAX_STRATEGY_SETTINGS}, got {n}"
        ));
    }
    Ok(())
}

/// All `3^n` deterministic strategies in lexicographic order.
pub fn enumerate_strategies(n: usize) -> Result<Vec<DeterministicStrategy>> {
    check_strategy_n(n)?;
    Ok((0..3usize.pow(n as u32)).map(|i| DeterministicStrategy::from_index(i, n)).collect())
}
