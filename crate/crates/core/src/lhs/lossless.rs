use crate::error::{invalid, Result};
use crate::measurements::MeasurementSet;

/// Largest steering parameter a deterministic (lossless) LHS strategy can
/// reach: `max_a |sum_k a_k u_k| / n` over the `2^n` sign vectors.
pub fn lossless_lhs_bound(settings: &MeasurementSet) -> Result<f64> {
    let dirs = settings.bloch_vectors();
    let n = dirs.len();
    if n > 20 {
        return invalid(format!("exhaustive sign enumeration is limited to n <= 20, got {n}"));
    }
    let mut best = 0.0f64;
    for signs in 0..(1u32 << n) {
        let mut acc = [0.0; 3];
        for (k, d) in dirs.iter().enumerate() {
            let s = if signs >> k & 1 == 1 { -1.0 } else { 1.0 };
            for i in 0..3 {
                acc[i] += s * d[i];
            }
        }
        best = best.max((acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2]).sqrt());
    }
    Ok(best / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurements::phase_encoding_set;

    #[test]
    fn closed_forms() {
        let two = lossless_lhs_bound(&phase_encoding_set(2).unwrap()).unwrap();
        assert!((two - 2f64.sqrt() / 2.0).abs() < 1e-15);
        let three = lossless_lhs_bound(&phase_encoding_set(3).unwrap()).unwrap();
        assert!((three - 3f64.sqrt() / 3.0).abs() < 1e-15);
        let one = lossless_lhs_bound(&MeasurementSet::custom(&[[0.0, 1.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(one, 1.0);
    }

    #[test]
    fn too_many_settings() {
        let big = phase_encoding_set(21).unwrap();
        assert!(lossless_lhs_bound(&big).is_err());
    }
}
