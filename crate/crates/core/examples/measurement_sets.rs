//! Phase-encoding and Platonic-solid measurement sets on the Bloch sphere.
//!
//! cargo run --example measurement_sets -- 6

use tbsteer::measurements::{phase_encoding_set, platonic_set, MeasurementSet};

fn show(name: &str, set: &MeasurementSet) {
    println!("{name} ({} settings)", set.len());
    for m in set.measurements() {
        let [x, y, z] = m.bloch();
        println!("  {:>4}  ({x:+.4}, {y:+.4}, {z:+.4})", m.label());
    }
    let v = set.bloch_vectors();
    let max_overlap = (0..v.len())
        .flat_map(|i| (i + 1..v.len()).map(move |j| (i, j)))
        .map(|(i, j)| (v[i][0] * v[j][0] + v[i][1] * v[j][1] + v[i][2] * v[j][2]).abs())
        .fold(0.0, f64::max);
    println!("  largest |u_i . u_j| = {max_overlap:.6}");
}

fn main() -> tbsteer::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(6);
    show("phase encoding", &phase_encoding_set(n)?);
    match platonic_set(n) {
        Ok(set) => show("platonic", &set),
        Err(e) => println!("platonic: {e}"),
    }
    Ok(())
}
