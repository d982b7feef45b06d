use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tracked relative-delay bins, in units of the interferometer delay:
/// the central peak, the two side peaks and the two adjacent bins.
pub const BINS: [i8; 5] = [-2, -1, 0, 1, 2];

fn bin_index(bin: i8) -> usize {
    debug_assert!((-2..=2).contains(&bin));
    (bin + 2) as usize
}

/// A pair of output ports, Alice's first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutputPair {
    #[serde(rename = "A+B+")]
    PlusPlus,
    #[serde(rename = "A+B-")]
    PlusMinus,
    #[serde(rename = "A-B+")]
    MinusPlus,
    #[serde(rename = "A-B-")]
    MinusMinus,
}

impl OutputPair {
    pub const ALL: [OutputPair; 4] = [OutputPair::PlusPlus, OutputPair::PlusMinus, OutputPair::MinusPlus, OutputPair::MinusMinus];

    pub fn from_ports(alice_plus: bool, bob_plus: bool) -> Self {
        match (alice_plus, bob_plus) {
            (true, true) => OutputPair::PlusPlus,
            (true, false) => OutputPair::PlusMinus,
            (false, true) => OutputPair::MinusPlus,
            (false, false) => OutputPair::MinusMinus,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Product of the two port signs.
    pub fn parity(self) -> f64 {
        match self {
            OutputPair::PlusPlus | OutputPair::MinusMinus => 1.0,
            _ => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OutputPair::PlusPlus => "A+B+",
            OutputPair::PlusMinus => "A+B-",
            OutputPair::MinusPlus => "A-B+",
            OutputPair::MinusMinus => "A-B-",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    AlicePlus,
    AliceMinus,
    BobPlus,
    BobMinus,
}

impl Detector {
    pub const ALL: [Detector; 4] = [Detector::AlicePlus, Detector::AliceMinus, Detector::BobPlus, Detector::BobMinus];

    pub fn new(alice: bool, plus: bool) -> Self {
        match (alice, plus) {
            (true, true) => Detector::AlicePlus,
            (true, false) => Detector::AliceMinus,
            (false, true) => Detector::BobPlus,
            (false, false) => Detector::BobMinus,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Coincidence histograms for the four output pairs, per setting, plus
/// singles and the off-peak accidental count.
///
/// Coincidences whose bases differ fall outside the five tracked bins and
/// are kept in a per-setting `outside` counter, so every coincidence is
/// counted exactly once.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramSet {
    n_settings: usize,
    /// `counts[pair][setting][bin + 2]`.
    counts: Vec<Vec<[u64; 5]>>,
    outside: Vec<Vec<u64>>,
    singles: [u64; 4],
    /// Coincidences between frames a fixed offset apart.
    offpeak: u64,
    frames: u64,
}

impl HistogramSet {
    pub fn new(n_settings: usize) -> Self {
        HistogramSet {
            n_settings,
            counts: vec![vec![[0; 5]; n_settings]; 4],
            outside: vec![vec![0; n_settings]; 4],
            singles: [0; 4],
            offpeak: 0,
            frames: 0,
        }
    }

    pub fn n_settings(&self) -> usize {
        self.n_settings
    }

    pub fn count(&self, pair: OutputPair, setting: usize, bin: i8) -> u64 {
        self.counts[pair.index()][setting][bin_index(bin)]
    }

    pub fn outside(&self, pair: OutputPair, setting: usize) -> u64 {
        self.outside[pair.index()][setting]
    }

    pub fn singles(&self, d: Detector) -> u64 {
        self.singles[d.index()]
    }

    pub fn alice_singles(&self) -> u64 {
        self.singles[0] + self.singles[1]
    }

    pub fn bob_singles(&self) -> u64 {
        self.singles[2] + self.singles[3]
    }

    pub fn offpeak(&self) -> u64 {
        self.offpeak
    }

    /// Pulse slots covered.
    pub fn frames(&self) -> u64 {
        self.frames
    }

    /// All recorded coincidences, tracked bins and outside.
    pub fn total_coincidences(&self) -> u64 {
        let tracked: u64 = self.counts.iter().flatten().flatten().sum();
        tracked + self.outside.iter().flatten().sum::<u64>()
    }

    /// Sum over output pairs and settings of the given bin.
    pub fn bin_total(&self, bin: i8) -> u64 {
        self.counts.iter().flatten().map(|b| b[bin_index(bin)]).sum()
    }

    pub(crate) fn add_coincidence(&mut self, pair: OutputPair, setting: usize, bin: Option<i8>) {
        let slot = match bin {
            Some(b) => &mut self.counts[pair.index()][setting][bin_index(b)],
            None => &mut self.outside[pair.index()][setting],
        };
        *slot = slot.saturating_add(1);
    }

    pub(crate) fn add_single(&mut self, d: Detector) {
        self.singles[d.index()] = self.singles[d.index()].saturating_add(1);
    }

    pub(crate) fn add_offpeak(&mut self) {
        self.offpeak = self.offpeak.saturating_add(1);
    }

    pub(crate) fn set_frames(&mut self, frames: u64) {
        self.frames = frames;
    }

    /// Adds another run's counts. Merging is associative and commutative.
    pub fn merge(&mut self, other: &HistogramSet) -> Result<()> {
        if other.n_settings != self.n_settings {
            return invalid(format!(
                "cannot merge histograms over {} and {} settings",
                self.n_settings, other.n_settings
            ));
        }
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            for i in 0..5 {
                a[i] = a[i].saturating_add(b[i]);
            }
        }
        for (a, b) in self.outside.iter_mut().flatten().zip(other.outside.iter().flatten()) {
            *a = a.saturating_add(*b);
        }
        for i in 0..4 {
            self.singles[i] = self.singles[i].saturating_add(other.singles[i]);
        }
        self.offpeak = self.offpeak.saturating_add(other.offpeak);
        self.frames = self.frames.saturating_add(other.frames);
        Ok(())
    }

    fn check_shape(&self) -> Result<()> {
        let ok = self.counts.len() == 4
            && self.outside.len() == 4
            && self.counts.iter().all(|c| c.len() == self.n_settings)
            && self.outside.iter().all(|c| c.len() == self.n_settings);
        if !ok {
            return invalid(format!("histogram arrays do not match n_settings = {}", self.n_settings));
        }
        Ok(())
    }

    pub fn to_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn from_json<R: Read>(reader: R) -> Result<Self> {
        let h: HistogramSet = serde_json::from_reader(reader)?;
        h.check_shape()?;
        Ok(h)
    }

    /// Rows `pair,setting,bin,count`; the `bin` column holds `-2..2` or
    /// `outside`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["pair", "setting", "bin", "count"])?;
        for pair in OutputPair::ALL {
            for k in 0..self.n_settings {
                for b in BINS {
                    w.write_record([pair.label(), &k.to_string(), &b.to_string(), &self.count(pair, k, b).to_string()])?;
                }
                w.write_record([pair.label(), &k.to_string(), "outside", &self.outside(pair, k).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> HistogramSet {
        let mut h = HistogramSet::new(n);
        let mut s = seed;
        for _ in 0..50 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let pair = OutputPair::ALL[(s >> 60) as usize % 4];
            let k = (s >> 40) as usize % n;
            let bin = match (s >> 20) % 6 {
                5 => None,
                b => Some(b as i8 - 2),
            };
            h.add_coincidence(pair, k, bin);
            h.add_single(Detector::ALL[(s >> 10) as usize % 4]);
        }
        h.set_frames(1000);
        h
    }

    #[test]
    fn merge_is_associative_and_commutative() {
        let (a, b, c) = (sample(3, 1), sample(3, 2), sample(3, 3));
        let mut ab_c = a.clone();
        ab_c.merge(&b).unwrap();
        ab_c.merge(&c).unwrap();
        let mut bc = b.clone();
        bc.merge(&c).unwrap();
        let mut a_bc = a.clone();
        a_bc.merge(&bc).unwrap();
        assert_eq!(ab_c, a_bc);
        let mut cba = c.clone();
        cba.merge(&b).unwrap();
        cba.merge(&a).unwrap();
        assert_eq!(ab_c, cba);
        assert_eq!(ab_c.total_coincidences(), 150);
        assert!(a.clone().merge(&sample(4, 1)).is_err());
    }

    #[test]
    fn csv_and_json_round_trip() {
        let h = sample(2, 9);
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("pair,setting,bin,count\nA+B+,0,-2,"));
        assert_eq!(text.lines().count(), 1 + 4 * 2 * 6);
        let total: u64 = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
        assert_eq!(total, h.total_coincidences());
        let mut js = Vec::new();
        h.to_json(&mut js).unwrap();
        assert_eq!(HistogramSet::from_json(js.as_slice()).unwrap(), h);
    }
}
