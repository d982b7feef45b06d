//! Critical p* against efficiency for n = 6..9 phase-encoding settings,
//! written as CSV on stdout.
//!
//! cargo run --release --example bound_curve > curves.csv

use std::io::stdout;

use tbsteer::lhs::{bound_curve, write_bound_csv};
use tbsteer::measurements::SetFamily;

fn main() -> tbsteer::Result<()> {
    let grid: Vec<f64> = (3..=20).map(|i| i as f64 * 0.05).collect();
    let mut all = Vec::new();
    for n in 6..=9 {
        let pts = bound_curve(n, SetFamily::PhaseEncoding, &grid, 1e-7)?;
        eprintln!("n = {n}: {} points, p*(1) = {:.4}", pts.len(), pts.last().unwrap().p_star);
        all.extend(pts);
    }
    write_bound_csv(stdout().lock(), &all)
}
