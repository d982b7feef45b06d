//! Critical efficiency for a perfectly correlated source and critical
//! entangled fraction at the measured heralding efficiency, n = 9.
//!
//! cargo run --release --example critical_threshold

use tbsteer::lhs::{build_test_assemblage, critical_epsilon, critical_p, verify_certificate};
use tbsteer::measurements::phase_encoding_set;
use tbsteer::quantum::IsotropicParams;

fn main() -> tbsteer::Result<()> {
    let n = 9;
    let set = phase_encoding_set(n)?;

    let eps = critical_epsilon(n, 1.0, &set, 1e-7)?;
    println!("epsilon*(p = 1) = {:.6}   (1/n = {:.6}, {} rounds)", eps.epsilon, 1.0 / n as f64, eps.rounds);

    // just above the threshold the dual functional proves steering
    let above = build_test_assemblage(IsotropicParams::new(1.0, 0.0)?, eps.epsilon + 0.005, &set)?;
    let cert = eps.certificate.as_ref().expect("certificate");
    println!("certificate value just above threshold: {:.3e}", cert.evaluate(&above));
    println!("verified over all 3^{n} strategies: {}", verify_certificate(cert, &above, 1e-9)?);

    for e in [0.111, 0.15, 0.219, 0.5, 1.0] {
        let pt = critical_p(n, e, &set, 1e-7)?;
        println!("p*(epsilon = {e:.3}) = {:.6}  [{}]", pt.p_star, pt.status.as_str());
    }
    Ok(())
}
