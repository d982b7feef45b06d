//! Independent reference computations for the steering bounds.

use approx::assert_abs_diff_eq;
use tbsteer::lhs::{
    build_test_assemblage, critical_epsilon, critical_p, lhs_membership, lossless_lhs_bound, Assemblage, Outcome,
};
use tbsteer::measurements::{phase_encoding_set, platonic_set, MeasurementSet};
use tbsteer::quantum::{expected_steering_parameter, HermitianOp, IsotropicParams};
use tbsteer::measurements::complementary_settings;

fn iso(p: f64) -> IsotropicParams {
    IsotropicParams::new(p, 0.0).unwrap()
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Explicit LHS model at efficiency 1/n: each hidden state answers a single
/// setting with a pure state along that direction and reports null elsewhere.
fn one_answer_model(set: &MeasurementSet) -> Assemblage {
    let n = set.len();
    let w = 1.0 / (2.0 * n as f64);
    let dirs = set.bloch_vectors();
    let pure = |u: [f64; 3], s: f64| HermitianOp::from_pauli([0.5, 0.5 * s * u[0], 0.5 * s * u[1], 0.5 * s * u[2]]);
    let members = (0..n)
        .map(|k| {
            let mut m = [HermitianOp::zeros(2), HermitianOp::zeros(2), HermitianOp::zeros(2)];
            for (j, u) in dirs.iter().enumerate() {
                for s in [1.0, -1.0] {
                    let a = match (j == k, s > 0.0) {
                        (true, true) => Outcome::Plus,
                        (true, false) => Outcome::Minus,
                        (false, _) => Outcome::Null,
                    };
                    m[a.index()] = m[a.index()].add(&pure(*u, s).scale(w));
                }
            }
            m
        })
        .collect();
    Assemblage::new(members).unwrap()
}

#[test]
fn explicit_model_reproduces_the_perfect_assemblage_at_one_over_n() {
    for n in [2, 3, 6, 9] {
        let set = phase_encoding_set(n).unwrap();
        let model = one_answer_model(&set);
        let target = build_test_assemblage(iso(1.0), 1.0 / n as f64, &set).unwrap();
        for k in 0..n {
            for a in Outcome::ALL {
                assert!(model.member(a, k).max_abs_diff(target.member(a, k)) < 1e-12, "n={n} k={k}");
            }
        }
        assert!(lhs_membership(&target, 1e-8).unwrap().feasible);
    }
}

#[test]
fn brute_force_lossless_bound() {
    for set in [phase_encoding_set(4).unwrap(), phase_encoding_set(7).unwrap(), platonic_set(6).unwrap()] {
        let v = set.bloch_vectors();
        let n = v.len();
        let mut best: f64 = 0.0;
        for mask in 0..(1u32 << n) {
            let mut s = [0.0; 3];
            for (k, u) in v.iter().enumerate() {
                let sign = if mask >> k & 1 == 1 { 1.0 } else { -1.0 };
                for c in 0..3 {
                    s[c] += sign * u[c];
                }
            }
            best = best.max(dot(&s, &s).sqrt() / n as f64);
        }
        assert_abs_diff_eq!(lossless_lhs_bound(&set).unwrap(), best, epsilon = 1e-12);
        // the optimal functional never does worse than the linear one
        assert!(critical_p(n, 1.0, &set, 1e-8).unwrap().p_star <= best + 1e-7);
    }
}

#[test]
fn mutually_unbiased_lossless_thresholds() {
    let xz = MeasurementSet::custom(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]).unwrap();
    let xyz = MeasurementSet::custom(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
    assert_abs_diff_eq!(critical_p(2, 1.0, &xz, 1e-9).unwrap().p_star, 0.5f64.sqrt(), epsilon = 1e-6);
    assert_abs_diff_eq!(critical_p(3, 1.0, &xyz, 1e-9).unwrap().p_star, (1.0f64 / 3.0).sqrt(), epsilon = 1e-6);
}

#[test]
fn bisection_on_membership_matches_critical_p() {
    for (n, eps) in [(3, 0.5), (4, 0.35), (5, 0.8)] {
        let set = phase_encoding_set(n).unwrap();
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > 1e-5 {
            let mid = 0.5 * (lo + hi);
            if lhs_membership(&build_test_assemblage(iso(mid), eps, &set).unwrap(), 1e-9).unwrap().feasible {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_abs_diff_eq!(critical_p(n, eps, &set, 1e-8).unwrap().p_star, 0.5 * (lo + hi), epsilon = 2e-5);
    }
}

#[test]
fn critical_epsilon_inverts_critical_p() {
    let set = phase_encoding_set(6).unwrap();
    for p in [0.75, 0.9, 0.97] {
        let eps = critical_epsilon(6, p, &set, 1e-8).unwrap().epsilon;
        assert_abs_diff_eq!(critical_p(6, eps, &set, 1e-8).unwrap().p_star, p, epsilon = 1e-5);
    }
}

#[test]
fn expected_steering_parameter_with_visibility() {
    let set = phase_encoding_set(9).unwrap();
    let s = expected_steering_parameter(iso(1.0), &set, &complementary_settings(&set), 0.985).unwrap();
    assert_abs_diff_eq!(s.value, (1.0 + 8.0 * 0.985) / 9.0, epsilon = 1e-12);
    let s = expected_steering_parameter(iso(0.9), &set, &complementary_settings(&set), 1.0).unwrap();
    assert_abs_diff_eq!(s.value, 0.9, epsilon = 1e-12);
}
