use serde::{Deserialize, Serialize};

use super::strategy::Outcome;
use crate::error::{invalid, Result};
use crate::measurements::{MeasurementSet, Measurement};
use crate::quantum::{conditional_state, isotropic_state, outcome_projector, partial_trace_alice, HermitianOp, IsotropicParams};

/// Tolerance for the PSD, no-signalling and efficiency invariants.
pub const ASSEMBLAGE_TOL: f64 = 1e-9;

/// Bob's subnormalized conditional states, indexed by setting then outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assemblage {
    epsilon: f64,
    /// `members[k][a]` with `a` ordered as [`Outcome::ALL`].
    members: Vec<[HermitianOp; 3]>,
}

impl Assemblage {
    /// Validates positivity, no-signalling and a setting-independent
    /// conclusive probability.
    pub fn new(members: Vec<[HermitianOp; 3]>) -> Result<Self> {
        if members.is_empty() {
            return invalid("an assemblage needs at least one setting");
        }
        for (k, row) in members.iter().enumerate() {
            for (a, m) in row.iter().enumerate() {
                if m.dim() != 2 {
                    return invalid(format!("member ({}|{k}) is not a qubit operator", Outcome::from_index(a)));
                }
                if !m.is_psd(ASSEMBLAGE_TOL) {
                    return invalid(format!("member ({}|{k}) is not positive semidefinite", Outcome::from_index(a)));
                }
            }
        }
        let reduced = sum3(&members[0]);
        if (reduced.trace() - 1.0).abs() > ASSEMBLAGE_TOL {
            return invalid(format!("members of setting 0 sum to trace {}, expected 1", reduced.trace()));
        }
        let epsilon = members[0][0].trace() + members[0][1].trace();
        for (k, row) in members.iter().enumerate().skip(1) {
            if sum3(row).max_abs_diff(&reduced) > ASSEMBLAGE_TOL {
                return invalid(format!("setting {k} violates no-signalling"));
            }
            let conclusive = row[0].trace() + row[1].trace();
            if (conclusive - epsilon).abs() > ASSEMBLAGE_TOL {
                return invalid(format!(
                    "setting {k} has conclusive probability {conclusive}, setting 0 has {epsilon}"
                ));
            }
        }
        Ok(Assemblage { epsilon: epsilon.clamp(0.0, 1.0), members })
    }

    pub fn n(&self) -> usize {
        self.members.len()
    }

    /// Conclusive-report probability, identical for every setting.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn member(&self, outcome: Outcome, setting: usize) -> &HermitianOp {
        &self.members[setting][outcome.index()]
    }

    pub fn members(&self) -> &[[HermitianOp; 3]] {
        &self.members
    }

    /// Bob's unconditional state `sum_a sigma_{a|k}`.
    pub fn reduced_state(&self) -> HermitianOp {
        sum3(&self.members[0])
    }

    /// True when every null member vanishes (no losses).
    pub fn is_lossless(&self) -> bool {
        self.members.iter().all(|row| row[2].trace() <= 1e-12)
    }

    /// The trivially LHS assemblage with the same outcome probabilities and
    /// reduced state: `Tr[sigma_{a|k}] * rho_B`.
    pub(crate) fn uncorrelated_reference(&self) -> Vec<[HermitianOp; 3]> {
        let rho = self.reduced_state();
        self.members
            .iter()
            .map(|row| [0, 1, 2].map(|a| rho.scale(row[a].trace())))
            .collect()
    }
}

fn sum3(row: &[HermitianOp; 3]) -> HermitianOp {
    row[0].add(&row[1]).add(&row[2])
}

/// Alice's honest setting for Bob's setting `m`: the complementary direction
/// rotated by `alpha` about `z`, so that every ideal correlator equals `p`.
fn alice_direction(m: &Measurement, alpha: f64) -> [f64; 3] {
    let [x, y, z] = m.bloch();
    let (s, c) = alpha.sin_cos();
    let (cx, cy) = (x, -y);
    [c * cx - s * cy, s * cx + c * cy, z]
}

/// Assemblage of the honest protocol on an isotropic state when Alice's
/// conclusive-report probability is `epsilon` at every setting. Null reports
/// leave Bob with his reduced state.
///
/// Conclusive members equal `(epsilon/4)(I +- p n_k . sigma)` for Bob's
/// direction `n_k`; they are computed here from the state itself.
pub fn build_test_assemblage(params: IsotropicParams, epsilon: f64, settings: &MeasurementSet) -> Result<Assemblage> {
    if !(0.0..=1.0).contains(&epsilon) {
        return invalid(format!("efficiency must lie in [0,1], got {epsilon}"));
    }
    let rho = isotropic_state(params);
    let reduced = partial_trace_alice(&rho)?;
    let members = settings
        .measurements()
        .iter()
        .map(|m| {
            let a = alice_direction(m, params.alpha());
            let plus = conditional_state(&rho, &outcome_projector(a, 1))?.scale(epsilon);
            let minus = conditional_state(&rho, &outcome_projector(a, -1))?.scale(epsilon);
            Ok([plus, minus, reduced.scale(1.0 - epsilon)])
        })
        .collect::<Result<Vec<_>>>()?;
    Assemblage::new(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurements::{phase_encoding_set, platonic_set};

    fn iso(p: f64) -> IsotropicParams {
        IsotropicParams::new(p, 0.0).unwrap()
    }

    #[test]
    fn maximally_entangled_lossless_time_basis_member() {
        let set = phase_encoding_set(2).unwrap();
        let asm = build_test_assemblage(iso(1.0), 1.0, &set).unwrap();
        let expect = HermitianOp::from_pauli([0.25, 0.0, 0.0, 0.25]);
        assert!(asm.member(Outcome::Plus, 0).max_abs_diff(&expect) < 1e-15);
        assert!(asm.is_lossless());
    }

    #[test]
    fn zero_efficiency_discards_everything() {
        let set = phase_encoding_set(4).unwrap();
        let asm = build_test_assemblage(iso(0.9), 0.0, &set).unwrap();
        for k in 0..4 {
            assert!(asm.member(Outcome::Plus, k).max_abs_diff(&HermitianOp::zeros(2)) < 1e-15);
            assert!(asm.member(Outcome::Minus, k).max_abs_diff(&HermitianOp::zeros(2)) < 1e-15);
            assert!(asm.member(Outcome::Null, k).max_abs_diff(&HermitianOp::identity(2).scale(0.5)) < 1e-15);
        }
    }

    #[test]
    fn white_noise_members() {
        let set = phase_encoding_set(3).unwrap();
        let asm = build_test_assemblage(iso(0.0), 1.0, &set).unwrap();
        for k in 0..3 {
            for o in [Outcome::Plus, Outcome::Minus] {
                assert!(asm.member(o, k).max_abs_diff(&HermitianOp::identity(2).scale(0.25)) < 1e-15);
            }
        }
    }

    #[test]
    fn matches_closed_form_for_any_phase() {
        let set = platonic_set(6).unwrap();
        for alpha in [0.0, 0.7, 2.5] {
            let params = IsotropicParams::new(0.8, alpha).unwrap();
            let asm = build_test_assemblage(params, 0.3, &set).unwrap();
            for (k, m) in set.measurements().iter().enumerate() {
                let n = m.bloch();
                for (o, s) in [(Outcome::Plus, 1.0), (Outcome::Minus, -1.0)] {
                    let expect = HermitianOp::from_pauli([0.075, s * 0.06 * n[0], s * 0.06 * n[1], s * 0.06 * n[2]]);
                    assert!(asm.member(o, k).max_abs_diff(&expect) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn rejects_signalling_and_bad_efficiency() {
        let set = phase_encoding_set(2).unwrap();
        assert!(build_test_assemblage(iso(0.5), 1.2, &set).is_err());
        let q = HermitianOp::identity(2).scale(0.25);
        let z = HermitianOp::zeros(2);
        let skew = HermitianOp::from_pauli([0.25, 0.0, 0.0, 0.25]);
        let err = Assemblage::new(vec![
            [q.clone(), q.clone(), z.clone()],
            [skew.clone(), skew.clone(), z.clone()],
        ]);
        assert!(err.is_err());
        let uneven = Assemblage::new(vec![
            [q.clone(), q.clone(), z.clone()],
            [q.scale(0.5), q.scale(0.5), q.clone()],
        ]);
        assert!(uneven.is_err());
    }
}
