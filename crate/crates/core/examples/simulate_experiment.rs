//! End-to-end steering test on simulated data: histograms, Klyshko
//! efficiency, S_9 and the verdict. A second run adds loss on Alice's arm
//! until her efficiency drops below 1/9.
//!
//! cargo run --release --example simulate_experiment

use tbsteer::measurements::phase_encoding_set;
use tbsteer::sim::{estimate_klyshko, estimate_steering, simulate_run, verdict, ExperimentConfig, LossComponent};

fn run(label: &str, cfg: &ExperimentConfig) -> tbsteer::Result<()> {
    let hist = simulate_run(cfg)?;
    let k = estimate_klyshko(&hist)?;
    let s = estimate_steering(&hist, cfg.n_settings)?;
    let v = verdict(&s, k.alice, cfg.n_settings, &phase_encoding_set(cfg.n_settings)?)?;
    println!("{label}");
    println!("  coincidences {}, accidentals {}", k.coincidences, k.accidentals);
    println!("  epsilon_A = {:.4} +- {:.4} (ledger {:.4})", k.alice.value, k.alice.std_error, cfg.alice_efficiency()?);
    println!("  S_{} = {:.5} +- {:.5}", cfg.n_settings, s.value, s.std_error);
    println!("  p* = {:.5}, margin {:.1} sigma, passed = {}", v.p_star_at_epsilon, v.margin, v.passed);
    Ok(())
}

fn main() -> tbsteer::Result<()> {
    let cfg = ExperimentConfig::default();
    run("default configuration", &cfg)?;
    let mut lossy = cfg.clone();
    lossy.alice_loss_db.push(LossComponent::new("extra attenuator", 3.5));
    run("with 3.5 dB extra loss on Alice's arm", &lossy)
}
