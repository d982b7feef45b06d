//! Steering functionals and their exhaustive verification.
//!
//! A functional `{F_{a|k}}` with `sum_k F_{lambda(k)|k} >= 0` for every
//! deterministic strategy is nonnegative on every LHS assemblage, so a
//! strictly negative value on some assemblage proves it has no LHS model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assemblage::Assemblage;
use super::strategy::{check_strategy_n, digits, Outcome};
use crate::error::{invalid, Result};
use crate::quantum::HermitianOp;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SteeringFunctional {
    /// `members[k][a]`, outcomes ordered as [`Outcome::ALL`].
    pub members: Vec<[HermitianOp; 3]>,
    /// `sum_{a,k} Tr[F_{a|k} sigma_{a|k}]` on the assemblage it was derived for.
    pub violation: f64,
}

impl SteeringFunctional {
    pub fn new(members: Vec<[HermitianOp; 3]>, assemblage: &Assemblage) -> Self {
        let violation = evaluate(&members, assemblage);
        SteeringFunctional { members, violation }
    }

    pub fn zero(n: usize) -> Self {
        SteeringFunctional {
            members: (0..n).map(|_| [HermitianOp::zeros(2), HermitianOp::zeros(2), HermitianOp::zeros(2)]).collect(),
            violation: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.members.len()
    }

    pub fn member(&self, outcome: Outcome, setting: usize) -> &HermitianOp {
        &self.members[setting][outcome.index()]
    }

    /// Value of the functional on an assemblage.
    pub fn evaluate(&self, assemblage: &Assemblage) -> f64 {
        evaluate(&self.members, assemblage)
    }

    /// Smallest eigenvalue of `sum_k F_{lambda(k)|k}` over all `3^n`
    /// strategies.
    pub fn min_strategy_eigenvalue(&self) -> f64 {
        let n = self.n();
        let coords: Vec<[[f64; 4]; 3]> = self.members.iter().map(|row| [0, 1, 2].map(|a| row[a].to_pauli())).collect();
        (0..3usize.pow(n as u32))
            .into_par_iter()
            .map(|i| {
                let mut acc = [0.0; 4];
                for (k, d) in digits(i, n).enumerate() {
                    for r in 0..4 {
                        acc[r] += coords[k][d][r];
                    }
                }
                // 2x2 block is PSD iff trace >= 0 and det >= 0; its smallest
                // eigenvalue is t - |r|
                acc[0] - (acc[1] * acc[1] + acc[2] * acc[2] + acc[3] * acc[3]).sqrt()
            })
            .reduce(|| f64::INFINITY, f64::min)
    }
}

fn evaluate(members: &[[HermitianOp; 3]], assemblage: &Assemblage) -> f64 {
    members
        .iter()
        .zip(assemblage.members())
        .map(|(f, s)| (0..3).map(|a| f[a].trace_product(&s[a])).sum::<f64>())
        .sum()
}

/// True iff `certificate` is nonnegative (to within `-tol I`) on every
/// deterministic strategy and strictly below `-tol` on `assemblage`. All
/// `3^n` strategies are checked.
pub fn verify_certificate(certificate: &SteeringFunctional, assemblage: &Assemblage, tol: f64) -> Result<bool> {
    if certificate.n() != assemblage.n() {
        return invalid(format!(
            "certificate has {} settings, assemblage has {}",
            certificate.n(),
            assemblage.n()
        ));
    }
    if certificate.members.iter().flatten().any(|f| f.dim() != 2) {
        return invalid("certificate members must be qubit operators");
    }
    check_strategy_n(certificate.n())?;
    if certificate.evaluate(assemblage) >= -tol {
        return Ok(false);
    }
    Ok(certificate.min_strategy_eigenvalue() >= -tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhs::build_test_assemblage;
    use crate::measurements::phase_encoding_set;
    use crate::quantum::IsotropicParams;

    #[test]
    fn zero_functional_never_certifies() {
        let set = phase_encoding_set(3).unwrap();
        let asm = build_test_assemblage(IsotropicParams::new(1.0, 0.0).unwrap(), 1.0, &set).unwrap();
        assert!(!verify_certificate(&SteeringFunctional::zero(3), &asm, 1e-8).unwrap());
        assert!(verify_certificate(&SteeringFunctional::zero(2), &asm, 1e-8).is_err());
    }

    /// Hand-built linear steering inequality for {Z, X}: F_{a|k} = c I - a M_k / 2,
    /// whose LHS bound is attained at c = 1/(2 sqrt 2) ... checked on the lossless
    /// maximally entangled assemblage.
    #[test]
    fn textbook_two_setting_functional() {
        let set = phase_encoding_set(2).unwrap();
        let asm = build_test_assemblage(IsotropicParams::new(1.0, 0.0).unwrap(), 1.0, &set).unwrap();
        let c = 1.0 / (2.0 * 2f64.sqrt()) + 1e-6;
        let members = set
            .measurements()
            .iter()
            .map(|m| {
                let o = m.observable();
                let id = HermitianOp::identity(2).scale(c);
                [id.sub(&o.scale(0.5)), id.add(&o.scale(0.5)), HermitianOp::identity(2)]
            })
            .collect();
        let f = SteeringFunctional::new(members, &asm);
        assert!(f.min_strategy_eigenvalue() >= -1e-12);
        assert!(verify_certificate(&f, &asm, 1e-8).unwrap());
        let noise = build_test_assemblage(IsotropicParams::new(0.0, 0.0).unwrap(), 1.0, &set).unwrap();
        assert!(!verify_certificate(&f, &noise, 1e-8).unwrap());
    }
}
