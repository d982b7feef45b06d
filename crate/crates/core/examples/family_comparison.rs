//! Phase-encoding against Platonic-solid settings: critical efficiency as a
//! function of the entangled fraction.

use tbsteer::lhs::critical_epsilon;
use tbsteer::measurements::{phase_encoding_set, platonic_set};

fn main() -> tbsteer::Result<()> {
    for n in [3, 6] {
        let (a, b) = (phase_encoding_set(n)?, platonic_set(n)?);
        println!("n = {n}");
        println!("  {:>6}  {:>10}  {:>10}  {:>10}", "p", "phase", "platonic", "gap");
        for p in [0.7, 0.8, 0.85, 0.9, 0.95, 0.99, 0.999] {
            let x = critical_epsilon(n, p, &a, 1e-7)?.epsilon;
            let y = critical_epsilon(n, p, &b, 1e-7)?.epsilon;
            println!("  {p:>6}  {x:>10.6}  {y:>10.6}  {:>+10.6}", x - y);
        }
    }
    Ok(())
}
