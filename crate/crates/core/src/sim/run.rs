//! Event-driven Monte Carlo of the pulsed time-bin experiment.
//!
//! Only pulse slots holding a pair or a dark count are visited; the gaps
//! between them are geometric. Within a slot each photon survives its arm
//! with the arm's total efficiency and is analysed in the time or phase
//! basis by a fair passive choice.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};

use super::config::ExperimentConfig;
use super::histogram::{Detector, HistogramSet, OutputPair};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Click {
    /// Arrival in the early (`late = false`) or late slot.
    Time { plus: bool, late: bool },
    Phase { plus: bool },
}

impl Click {
    fn plus(self) -> bool {
        match self {
            Click::Time { plus, .. } | Click::Phase { plus } => plus,
        }
    }
}

/// Bin of a coincidence between two clicks, `None` when the bases differ.
/// Correlated arrival slots land in the side peaks, anticorrelated ones in
/// the adjacent bins.
fn bin_of(a: Click, b: Click) -> Option<i8> {
    match (a, b) {
        (Click::Phase { .. }, Click::Phase { .. }) => Some(0),
        (Click::Time { late: la, .. }, Click::Time { late: lb, .. }) => Some(match (la, lb) {
            (false, false) => -1,
            (true, true) => 1,
            (false, true) => -2,
            (true, false) => 2,
        }),
        _ => None,
    }
}

fn random_click<R: Rng>(rng: &mut R) -> Click {
    let plus = rng.random_bool(0.5);
    if rng.random_bool(0.5) {
        Click::Time { plus, late: rng.random_bool(0.5) }
    } else {
        Click::Phase { plus }
    }
}

/// Bob's phase for slot `k` of an `n`-slot schedule; slot 0 is the time
/// basis and leaves the modulator at zero.
fn schedule_phase(k: usize, n: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        (k - 1) as f64 * PI / (n - 1) as f64
    }
}

/// Zero-truncated Poisson draw by inversion.
fn pairs_in_pulse<R: Rng>(rng: &mut R, mu: f64) -> u32 {
    let u: f64 = rng.random();
    let norm = -(-mu).exp_m1();
    let mut term = mu * (-mu).exp() / norm;
    let mut cdf = term;
    let mut k = 1;
    while u > cdf && k < 64 {
        k += 1;
        term *= mu / k as f64;
        cdf += term;
    }
    k
}

struct Source {
    p: f64,
    visibility: f64,
    eta_a: f64,
    eta_b: f64,
}

impl Source {
    /// Clicks from one pair; `delta` is the net interferometer phase.
    fn emit<R: Rng>(&self, rng: &mut R, delta: f64) -> (Option<Click>, Option<Click>) {
        let a = rng.random_bool(self.eta_a);
        let b = rng.random_bool(self.eta_b);
        match (a, b) {
            (false, false) => (None, None),
            (true, false) => (Some(random_click(rng)), None),
            (false, true) => (None, Some(random_click(rng))),
            (true, true) => {
                let (ta, tb) = (rng.random_bool(0.5), rng.random_bool(0.5));
                let (pa, pb) = (rng.random_bool(0.5), rng.random_bool(0.5));
                match (ta, tb) {
                    (true, true) => {
                        let late = rng.random_bool(0.5);
                        let same = rng.random_bool((1.0 + self.p) / 2.0);
                        (Some(Click::Time { plus: pa, late }), Some(Click::Time { plus: pb, late: late == same }))
                    }
                    (false, false) => {
                        let e = self.visibility * self.p * delta.cos();
                        let same = rng.random_bool(((1.0 + e) / 2.0).clamp(0.0, 1.0));
                        (Some(Click::Phase { plus: pa }), Some(Click::Phase { plus: pa == same }))
                    }
                    _ => {
                        let click = |time: bool, plus: bool, late: bool| {
                            if time { Click::Time { plus, late } } else { Click::Phase { plus } }
                        };
                        let (la, lb) = (rng.random_bool(0.5), rng.random_bool(0.5));
                        (Some(click(ta, pa, la)), Some(click(tb, pb, lb)))
                    }
                }
            }
        }
    }
}

/// Simulates one acquisition. The result depends only on `config`
/// (including its seed).
pub fn simulate_run(config: &ExperimentConfig) -> Result<HistogramSet> {
    config.validate()?;
    let n = config.n_settings;
    let frames = config.frames();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let source = Source {
        p: config.p,
        visibility: config.visibility,
        eta_a: config.alice_efficiency()?,
        eta_b: config.bob_efficiency()?,
    };
    let mu = config.pair_prob;
    let pair_gap = (mu > 0.0).then(|| Geometric::new(-(-mu).exp_m1()).expect("probability in (0,1)"));
    let dark_p = config.dark_rate_hz / config.rep_rate;
    let dark_gap = (dark_p > 0.0).then(|| Geometric::new(dark_p).expect("probability in (0,1)"));

    let mut next_pair = pair_gap.map_or(u64::MAX, |g| g.sample(&mut rng));
    let mut next_dark = [u64::MAX; 4];
    if let Some(g) = dark_gap {
        for d in next_dark.iter_mut() {
            *d = g.sample(&mut rng);
        }
    }

    let mut hist = HistogramSet::new(n);
    let slip = (n + config.schedule_slip % n - config.slip_compensation % n) % n;
    let mut drift = 0.0;
    let mut last_frame = 0u64;
    let mut recent_alice: VecDeque<u64> = VecDeque::new();
    let mut alice: Vec<Click> = Vec::new();
    let mut bob: Vec<Click> = Vec::new();

    loop {
        let f = next_dark.iter().copied().fold(next_pair, u64::min);
        if f >= frames {
            break;
        }
        if config.phase_drift_sigma > 0.0 {
            let dt = (f - last_frame) as f64 / config.rep_rate;
            let step: f64 = rng.sample(StandardNormal);
            drift += config.phase_drift_sigma * dt.sqrt() * step;
        }
        last_frame = f;
        alice.clear();
        bob.clear();

        let k = (f % n as u64) as usize;
        if next_pair == f {
            let alice_k = (k + slip) % n;
            let delta = schedule_phase(k, n) - schedule_phase(alice_k, n)
                + config.phase_compensation
                + config.phase_offset
                + drift;
            for _ in 0..pairs_in_pulse(&mut rng, mu) {
                let (a, b) = source.emit(&mut rng, delta);
                alice.extend(a);
                bob.extend(b);
            }
            next_pair = f + 1 + pair_gap.expect("pairs scheduled").sample(&mut rng);
        }
        for (d, next) in next_dark.iter_mut().enumerate() {
            if *next == f {
                let plus = d % 2 == 0;
                let click = match random_click(&mut rng) {
                    Click::Time { late, .. } => Click::Time { plus, late },
                    Click::Phase { .. } => Click::Phase { plus },
                };
                if d < 2 { alice.push(click) } else { bob.push(click) }
                *next = f + 1 + dark_gap.expect("darks scheduled").sample(&mut rng);
            }
        }

        // each side resolves a single click per slot
        let pick = |rng: &mut ChaCha8Rng, v: &[Click]| -> Option<usize> {
            match v.len() {
                0 => None,
                1 => Some(0),
                l => Some(rng.random_range(0..l)),
            }
        };
        let ia = pick(&mut rng, &alice);
        let ib = pick(&mut rng, &bob);
        if let Some(i) = ia {
            hist.add_single(Detector::new(true, alice[i].plus()));
            while recent_alice.front().is_some_and(|&g| g + config.accidental_offset < f) {
                recent_alice.pop_front();
            }
            recent_alice.push_back(f);
        }
        if let Some(j) = ib {
            hist.add_single(Detector::new(false, bob[j].plus()));
            if f >= config.accidental_offset && recent_alice.contains(&(f - config.accidental_offset)) {
                hist.add_offpeak();
            }
        }
        if let (Some(i), Some(j)) = (ia, ib) {
            hist.add_coincidence(OutputPair::from_ports(alice[i].plus(), bob[j].plus()), k, bin_of(alice[i], bob[j]));
        }
    }
    hist.set_frames(frames);
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_follow_arrival_slots() {
        let t = |late| Click::Time { plus: true, late };
        let ph = Click::Phase { plus: false };
        assert_eq!(bin_of(t(false), t(false)), Some(-1));
        assert_eq!(bin_of(t(true), t(true)), Some(1));
        assert_eq!(bin_of(t(false), t(true)), Some(-2));
        assert_eq!(bin_of(t(true), t(false)), Some(2));
        assert_eq!(bin_of(ph, ph), Some(0));
        assert_eq!(bin_of(ph, t(true)), None);
    }

    #[test]
    fn truncated_poisson_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mu = 0.08;
        let draws = 200_000;
        let mean = (0..draws).map(|_| pairs_in_pulse(&mut rng, mu) as f64).sum::<f64>() / draws as f64;
        let expect = mu / (1.0 - (-mu).exp());
        assert!((mean - expect).abs() < 5e-3, "{mean} vs {expect}");
    }

    #[test]
    fn same_seed_same_histogram() {
        let cfg = ExperimentConfig { duration_s: 2e-3, pair_prob: 0.01, ..Default::default() };
        assert_eq!(simulate_run(&cfg).unwrap(), simulate_run(&cfg).unwrap());
        let other = ExperimentConfig { seed: 2, ..cfg.clone() };
        assert_ne!(simulate_run(&cfg).unwrap(), simulate_run(&other).unwrap());
    }
}
