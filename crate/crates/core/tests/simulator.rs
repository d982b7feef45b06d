use std::f64::consts::PI;

use tbsteer::sim::{
    calibrate_phase, estimate_klyshko, estimate_steering, ledger_efficiency, alice_loss_ledger, simulate_run, ExperimentConfig,
};

fn json(cfg: &ExperimentConfig) -> String {
    let mut buf = Vec::new();
    simulate_run(cfg).unwrap().to_json(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn seeds_determine_the_run() {
    let cfg = ExperimentConfig { duration_s: 0.02, ..Default::default() };
    assert_eq!(json(&cfg), json(&cfg));
    assert_ne!(json(&cfg), json(&ExperimentConfig { seed: 2, ..cfg.clone() }));
}

#[test]
fn ledger_efficiency_is_six_point_six_db() {
    let eta = ledger_efficiency(&alice_loss_ledger()).unwrap();
    assert!((eta - 10f64.powf(-0.66)).abs() < 1e-12);
}

#[test]
fn klyshko_converges_as_the_run_grows() {
    let truth = 10f64.powf(-0.66);
    let mut errors = Vec::new();
    for duration in [0.05, 0.2, 0.8] {
        let cfg = ExperimentConfig { duration_s: duration, seed: 11, ..Default::default() };
        let k = estimate_klyshko(&simulate_run(&cfg).unwrap()).unwrap();
        assert!((k.alice.value - truth).abs() < 4.0 * k.alice.std_error, "duration {duration}: {} +- {}", k.alice.value, k.alice.std_error);
        let bob = cfg.bob_efficiency().unwrap();
        assert!((k.bob.value - bob).abs() < 4.0 * k.bob.std_error, "duration {duration}: bob {}", k.bob.value);
        errors.push(k.alice.std_error);
    }
    // sixteen times the data, a quarter of the error
    let ratio = errors[0] / errors[2];
    assert!((3.0..5.5).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn steering_estimate_tracks_source_quality() {
    for (p, v) in [(1.0, 0.985), (0.9, 1.0), (0.8, 0.95)] {
        let cfg = ExperimentConfig { p, visibility: v, duration_s: 0.3, pair_prob: 3e-3, seed: 5, ..Default::default() };
        let s = estimate_steering(&simulate_run(&cfg).unwrap(), 9).unwrap();
        let want = p * (1.0 + 8.0 * v) / 9.0;
        assert!((s.value - want).abs() < 4.0 * s.std_error, "p={p} V={v}: {} +- {} vs {want}", s.value, s.std_error);
    }
}

fn wrapped(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[test]
fn calibration_recovers_injected_offsets() {
    let base = ExperimentConfig { pair_prob: 0.01, duration_s: 0.3, ..Default::default() };
    let clean = calibrate_phase(&base).unwrap();
    assert!(wrapped(clean.phase_offset, 0.0) < 0.02, "offset {}", clean.phase_offset);
    assert_eq!(clean.schedule_slip, 0);

    let shifted = ExperimentConfig { phase_offset: 0.3, schedule_slip: 1, seed: 3, ..base };
    let c = calibrate_phase(&shifted).unwrap();
    assert!(wrapped(c.phase_offset, 0.3) < 0.02, "offset {}", c.phase_offset);
    assert_eq!(c.schedule_slip, 1);
}

#[test]
fn uncompensated_slip_destroys_the_signal() {
    let cfg = ExperimentConfig { schedule_slip: 4, duration_s: 0.1, pair_prob: 3e-3, ..Default::default() };
    let s = estimate_steering(&simulate_run(&cfg).unwrap(), 9).unwrap();
    assert!(s.value < 0.5, "S_9 = {}", s.value);
}
