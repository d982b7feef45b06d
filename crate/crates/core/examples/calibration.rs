//! Recover an unknown interferometer phase and a one-slot schedule slip.

use tbsteer::sim::{calibrate_phase, ExperimentConfig};

fn main() -> tbsteer::Result<()> {
    let cfg = ExperimentConfig { phase_offset: 0.3, schedule_slip: 1, pair_prob: 0.01, duration_s: 0.2, ..Default::default() };
    let c = calibrate_phase(&cfg)?;
    println!("phase offset: injected {:.3}, recovered {:.3} rad", cfg.phase_offset, c.phase_offset);
    println!("schedule slip: injected {}, recovered {}", cfg.schedule_slip, c.schedule_slip);
    for (d, s) in c.slip_scores.iter().enumerate() {
        println!("  slip {d}: S_n = {s:+.4}");
    }
    println!("{} simulated runs", c.runs);
    Ok(())
}
