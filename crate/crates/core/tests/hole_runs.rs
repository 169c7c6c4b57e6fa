use std::time::Instant;

use gravdeco::diffeo::DiffeoSpec;
use gravdeco::hole_experiment::{
    run_baseline, run_hole, sweep, sweep_config, HoleExperimentConfig, SweepParameter, COHERENT_THRESHOLD,
    DECOHERED_THRESHOLD, JOINT_CONTROL_TOLERANCE,
};
use gravdeco::{Complex64, Error};

/// Final baseline θ of the committed default scenario, recorded from a
/// validated run.
const DEFAULT_THETA_PIN: (f64, f64) = (0.9958028940958303, 0.017517813294170903);

#[test]
fn default_scenario_contrast() {
    let cfg = HoleExperimentConfig::default_weak();
    let start = Instant::now();
    let report = run_hole(&cfg).unwrap();
    assert!(start.elapsed().as_secs_f64() < 30.0);

    let base = report.final_baseline;
    assert!(base.abs >= COHERENT_THRESHOLD);
    assert!(base.arg.abs() > 1e-3);
    let pin = Complex64::new(DEFAULT_THETA_PIN.0, DEFAULT_THETA_PIN.1);
    assert!((base.theta() - pin).norm() <= 1e-9, "{:?}", base);

    let (t0, t1) = cfg.diffeo.ramp_times().unwrap();
    let hole = report.theta_hole.as_ref().unwrap();
    for (b, h) in report.theta_baseline.iter().zip(hole) {
        assert_eq!(b.t, h.t);
        if h.t <= t0 {
            assert!((b.theta() - h.theta()).norm() <= 1e-10);
        }
        if h.t > t1 {
            assert!(h.abs <= DECOHERED_THRESHOLD, "t = {}: {}", h.t, h.abs);
        }
    }
    assert!(report.final_hole.unwrap().abs <= DECOHERED_THRESHOLD);
    assert!(report.contrast.unwrap() >= COHERENT_THRESHOLD - DECOHERED_THRESHOLD);

    let diag = report.hole.as_ref().unwrap();
    assert!(diag.joint_control_deviation <= JOINT_CONTROL_TOLERANCE);
    let joint = report.theta_joint.as_ref().unwrap();
    assert!((joint.last().unwrap().theta() - base.theta()).norm() <= JOINT_CONTROL_TOLERANCE);
    for p in report.theta_baseline.iter().chain(hole).chain(joint) {
        assert!(p.abs <= 1.0 + 1e-9);
    }
}

#[test]
fn identity_diffeo_reproduces_baseline_exactly() {
    let cfg = HoleExperimentConfig {
        diffeo: DiffeoSpec::Identity,
        enforce_disjoint: false,
        ..HoleExperimentConfig::default_weak()
    };
    let report = run_hole(&cfg).unwrap();
    assert_eq!(report.theta_hole.as_ref().unwrap(), &report.theta_baseline);
}

#[test]
fn uncoupled_branches_stay_coherent() {
    let cfg = HoleExperimentConfig { coupling: 0.0, ..HoleExperimentConfig::default_weak() };
    for p in run_baseline(&cfg).unwrap().theta_baseline {
        assert!((p.theta() - Complex64::new(1.0, 0.0)).norm() <= 1e-12);
    }
}

#[test]
fn runs_are_deterministic() {
    let cfg = HoleExperimentConfig::default_weak();
    assert_eq!(run_hole(&cfg).unwrap(), run_hole(&cfg).unwrap());
}

#[test]
fn overlapping_target_region_is_rejected() {
    let mut cfg = HoleExperimentConfig::default_weak();
    cfg.diffeo = DiffeoSpec::TranslationRamp { shift: vec![5.0], t0: 1.0, t1: 3.0 };
    cfg.displaced_support.center = vec![5.0];
    assert!(matches!(run_hole(&cfg), Err(Error::InsufficientDisplacement(_))));
}

#[test]
fn leaking_support_is_rejected() {
    let mut cfg = HoleExperimentConfig::default_weak();
    cfg.support.half_width = vec![3.0];
    assert!(matches!(run_baseline(&cfg), Err(Error::SupportViolation(_))));
}

#[test]
fn single_value_sweep_matches_direct_run() {
    let cfg = HoleExperimentConfig::default_weak();
    let report = sweep(&cfg, SweepParameter::Mass, &[8.0]);
    let direct = run_hole(&sweep_config(&cfg, SweepParameter::Mass, 8.0)).unwrap();
    assert_eq!(report.entries[0].report.as_ref().unwrap(), &direct);
}

#[test]
fn coupling_sweep_is_monotone() {
    // Above 1.5x the default coupling the branches leak past the support.
    let cfg = HoleExperimentConfig::default_weak();
    let c = cfg.coupling;
    let report = sweep(&cfg, SweepParameter::Coupling, &[0.0, 0.5 * c, c, 1.5 * c]);
    assert!(report.flags.is_empty(), "{:?}", report.flags);
    let abs: Vec<f64> = report.entries.iter().map(|e| e.report.as_ref().unwrap().final_baseline.abs).collect();
    assert!(abs.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{abs:?}");
}

#[test]
fn displacement_sweep_follows_gaussian_tail() {
    let cfg = HoleExperimentConfig::default_weak();
    let sigma = cfg.packet.width;
    let values: Vec<f64> = (0..=5).map(|i| 2.0 * i as f64 * sigma).collect();
    let report = sweep(&cfg, SweepParameter::Displacement, &values);
    assert!(report.flags.is_empty(), "{:?}", report.flags);
    let finals: Vec<f64> = report.entries.iter().map(|e| e.report.as_ref().unwrap().final_hole.unwrap().abs).collect();
    assert!((finals[0] - report.entries[0].report.as_ref().unwrap().final_baseline.abs).abs() < 1e-12);
    // Translation commutes with free spreading, so the weakly coupled
    // overlap tracks exp(-d²/(8σ²)).
    for (d, abs) in values.iter().zip(&finals).skip(1) {
        let bound = (-d * d / (8.0 * sigma * sigma)).exp();
        assert!(*abs <= 3.0 * bound && *abs >= bound / 3.0, "d = {d}: {abs} vs {bound}");
    }
    assert!(*finals.last().unwrap() <= DECOHERED_THRESHOLD);
}

#[test]
fn sweep_records_failures_without_aborting() {
    let cfg = HoleExperimentConfig::default_weak();
    let report = sweep(&cfg, SweepParameter::Mass, &[-1.0, 5.0]);
    assert!(report.entries[0].error.is_some());
    assert!(report.entries[1].report.is_some());
}

#[test]
fn strong_coupling_breaks_the_support_assumption() {
    let cfg = HoleExperimentConfig { coupling: 2.0, ..HoleExperimentConfig::default_weak() };
    assert!(matches!(run_baseline(&cfg), Err(Error::SupportViolation(_))));
}
