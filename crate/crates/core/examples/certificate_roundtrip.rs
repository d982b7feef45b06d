//! Decide LHS membership of a lossy assemblage, archive the steering
//! functional as JSON and verify it again from the file.

use tbsteer::lhs::{build_test_assemblage, lhs_membership, verify_certificate, SteeringFunctional};
use tbsteer::measurements::phase_encoding_set;
use tbsteer::quantum::IsotropicParams;

fn main() -> tbsteer::Result<()> {
    let set = phase_encoding_set(6)?;
    for (p, eps) in [(0.99, 0.3), (0.7, 0.3)] {
        let asm = build_test_assemblage(IsotropicParams::new(p, 0.0)?, eps, &set)?;
        let d = lhs_membership(&asm, 1e-7)?;
        println!("p = {p}, epsilon = {eps}: LHS fraction t = {:.6}", d.lhs_fraction);
        if let Some(model) = &d.model {
            println!("  LHS model with {} hidden states, residual {:.2e}", model.members.len(), model.max_deviation(&asm));
        }
        if let Some(cert) = &d.certificate {
            let path = std::env::temp_dir().join("tbsteer_certificate.json");
            std::fs::write(&path, serde_json::to_string(cert)?)?;
            let back: SteeringFunctional = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
            println!("  steering certificate value {:.5}, reloaded from {} verifies: {}", back.violation, path.display(), verify_certificate(&back, &asm, 1e-9)?);
        }
    }
    Ok(())
}
