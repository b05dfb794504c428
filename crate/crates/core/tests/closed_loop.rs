use active_lines::control::{masked_platform_twist, DofMask};
use active_lines::geometry::{PluckerLine, POLE_EPSILON};
use active_lines::sim::{simulate, FailureKind, ScenarioConfig};
use active_lines::summary::{run_batch, summarize, DEFAULT_THRESHOLD};
use active_lines::Vec3;

#[test]
fn single_run_is_reproducible() {
    let cfg = ScenarioConfig {
        duration: 0.5,
        meas_noise_std: 1e-4,
        ..ScenarioConfig::cube(11)
    };
    assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
}

#[test]
fn log_is_uniform_in_time() {
    let cfg = ScenarioConfig {
        duration: 0.25,
        ..ScenarioConfig::cube(2)
    };
    let log = simulate(&cfg).unwrap();
    assert_eq!(log.records.len(), cfg.steps() + 1);
    for (k, r) in log.records.iter().enumerate() {
        assert_eq!(r.t, k as f64 * cfg.dt);
    }
}

#[test]
fn compensation_holds_measured_angles() {
    let log = simulate(&ScenarioConfig::cube(7)).unwrap();
    assert!(log.failure.is_none());
    let first = log.records[0].truth;
    // Once η̂ has converged the angles stop moving.
    let settled = log.at(1.5).unwrap().truth;
    let last = log.last().unwrap().truth;
    assert!((settled.theta - last.theta).abs() < 1e-3);
    assert!((settled.phi - last.phi).abs() < 1e-3);
    assert!((first.phi - last.phi).abs() < 0.2);
}

#[test]
fn sigma_ratio_is_fixed_by_elevation() {
    let log = simulate(&ScenarioConfig::cube(3)).unwrap();
    for r in log.records.iter().filter(|r| r.sigma_sq[0] > 1e-8) {
        let ratio = r.sigma_sq[1] / r.sigma_sq[0];
        let expect = 1.0 / r.truth.phi.cos().powi(2);
        assert!((ratio - expect).abs() < 1e-9 * expect, "t = {}", r.t);
    }
}

#[test]
fn planar_runs_only_use_platform_axes() {
    let cfg = ScenarioConfig::planar_robot(5);
    let log = simulate(&cfg).unwrap();
    assert!(log.failure.is_none());
    for r in &log.records {
        let p = masked_platform_twist(&r.twist, &DofMask::full(), &cfg.mount);
        assert!(p.nu.z.abs() < 1e-12 && p.omega.x.abs() < 1e-12 && p.omega.y.abs() < 1e-12);
    }
    assert!(log.last().unwrap().state_error().norm() < 1e-2);
}

#[test]
fn noisy_measurements_still_converge_roughly() {
    let cfg = ScenarioConfig {
        meas_noise_std: 1e-4,
        ..ScenarioConfig::cube(0)
    };
    let (runs, agg) = run_batch(&cfg, 0..10, 5e-2).unwrap();
    assert_eq!(agg.failures, 0, "{runs:?}");
    assert!(agg.converged >= 8, "{agg:?}");
}

#[test]
fn pole_crossing_is_recorded() {
    // Moment tilted 0.1 rad from the optical axis; pitching the camera
    // rotates it onto the pole.
    let h = Vec3::new(0.1f64.sin(), 0.0, 0.1f64.cos());
    let line = PluckerLine::new(Vec3::y(), h, 2.0).unwrap();
    let cfg = ScenarioConfig {
        active_control: false,
        line_override: Some(line),
        nu_init: Vec3::zeros(),
        omega_init: Vec3::new(0.0, 1.0, 0.0),
        duration: 1.0,
        ..ScenarioConfig::cube(0)
    };
    let log = simulate(&cfg).unwrap();
    let failure = log.failure.clone().expect("pole crossing");
    assert_eq!(failure.kind, FailureKind::PoleSingularity);
    assert!(failure.time > 0.05 && failure.time < 0.15, "{failure:?}");
    assert!(log.records.iter().all(|r| r.truth.phi.abs() < std::f64::consts::FRAC_PI_2 - POLE_EPSILON));
    let summary = summarize(0, &log, DEFAULT_THRESHOLD);
    assert!(!summary.converged);
    assert!(summary.failure.is_some());
}
