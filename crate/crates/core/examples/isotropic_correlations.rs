//! Correlators of the isotropic state for complementary equatorial settings,
//! computed from the 4x4 density matrix and from the closed form.
//!
//! cargo run --example isotropic_correlations

use std::f64::consts::PI;

use tbsteer::quantum::{correlation, equatorial_correlation, isotropic_state, sigma_theta, IsotropicParams};

fn main() -> tbsteer::Result<()> {
    let p = 0.9;
    for alpha in [0.0, PI / 4.0] {
        let rho = isotropic_state(IsotropicParams::new(p, alpha)?);
        println!("alpha = {alpha:.4}");
        for j in 0..5 {
            let theta = j as f64 * PI / 4.0;
            // Alice takes the complementary phase -theta
            let trace = correlation(&rho, &sigma_theta(-theta)?, &sigma_theta(theta)?)?;
            let closed = equatorial_correlation(p, alpha, -theta, theta);
            println!("  theta = {theta:.4}  Tr = {trace:+.6}  closed form = {closed:+.6}");
        }
    }
    Ok(())
}
