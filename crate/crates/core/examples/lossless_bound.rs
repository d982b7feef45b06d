//! Lossless LHS bound on the linear parameter S_n (brute force over sign
//! vectors) next to the optimal critical p* from the semidefinite program.
//! The two agree for n = 2, 3; beyond that the optimal functional does better.

use tbsteer::lhs::{critical_p, lossless_lhs_bound};
use tbsteer::measurements::{phase_encoding_set, platonic_set};

fn main() -> tbsteer::Result<()> {
    println!("{:>2}  {:>10}  {:>10}  {:>10}", "n", "S_n bound", "p*", "S_n plat.");
    for n in 2..=10 {
        let set = phase_encoding_set(n)?;
        let brute = lossless_lhs_bound(&set)?;
        let sdp = critical_p(n, 1.0, &set, 1e-8)?.p_star;
        let plat = platonic_set(n).map(|s| format!("{:.6}", lossless_lhs_bound(&s).unwrap())).unwrap_or_else(|_| "-".into());
        println!("{n:>2}  {brute:>10.6}  {sdp:>10.6}  {plat:>10}");
    }
    Ok(())
}
