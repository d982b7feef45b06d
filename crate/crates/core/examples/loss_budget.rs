//! Heralding efficiency from a loss budget, and how much margin above the
//! 1/n floor it leaves.

use tbsteer::sim::{alice_loss_ledger, ledger_efficiency};

fn main() -> tbsteer::Result<()> {
    let ledger = alice_loss_ledger();
    let mut total = 0.0;
    for c in &ledger {
        total += c.db;
        println!("{:<22} {:>4.1} dB", c.name, c.db);
    }
    let eta = ledger_efficiency(&ledger)?;
    println!("{:<22} {:>4.1} dB -> efficiency {:.4}", "total", total, eta);
    for n in 6..=9 {
        println!("n = {n}: floor 1/n = {:.4}, headroom {:.2} dB", 1.0 / n as f64, 10.0 * (eta * n as f64).log10());
    }
    Ok(())
}
