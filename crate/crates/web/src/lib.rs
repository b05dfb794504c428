//! Browser bindings. Every entry point takes and returns plain strings or
//! numbers so the same functions run natively in tests.

use std::f64::consts::PI;

use active_lines::config::ScenarioFile;
use active_lines::control::{
    achievable_sigma1_sq, compensating_omega, eigenvalues, jacobian_nu, ControlGains,
};
use active_lines::dynamics::{interaction_matrix, spherical_dynamics, CameraTwist};
use active_lines::geometry::{ReducedLineState, SphericalMoment};
use active_lines::observer::excitation_level;
use active_lines::sim::simulate;
use active_lines::summary::{summarize, DEFAULT_THRESHOLD};
use active_lines::Vec3;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Points kept per plotted series.
pub const MAX_POINTS: usize = 600;

#[derive(Serialize, Default)]
struct Series {
    t: Vec<f64>,
    theta: Vec<f64>,
    phi: Vec<f64>,
    eta1: Vec<f64>,
    eta2: Vec<f64>,
    theta_hat: Vec<f64>,
    phi_hat: Vec<f64>,
    eta1_hat: Vec<f64>,
    eta2_hat: Vec<f64>,
    nu: [Vec<f64>; 3],
    omega: [Vec<f64>; 3],
    sig1_sq: Vec<f64>,
    sig2_sq: Vec<f64>,
    plucker_err: Vec<f64>,
    camera: [Vec<f64>; 3],
}

fn error_json(msg: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": msg.to_string() }).to_string()
}

/// Runs a scenario described by a JSON object with the same keys as the
/// command-line config file. Returns the subsampled series and the run
/// summary, or `{"error": ...}`.
#[wasm_bindgen]
pub fn simulate_scenario(config_json: &str) -> String {
    let file: ScenarioFile = match serde_json::from_str(config_json) {
        Ok(f) => f,
        Err(e) => return error_json(format!("config: {e}")),
    };
    let cfg = match file.to_config() {
        Ok(c) => c,
        Err(e) => return error_json(e),
    };
    let log = match simulate(&cfg) {
        Ok(l) => l,
        Err(e) => return error_json(e),
    };
    let stride = log.records.len().div_ceil(MAX_POINTS).max(1);
    let mut s = Series::default();
    for r in log.records.iter().step_by(stride) {
        s.t.push(r.t);
        s.theta.push(r.truth.theta);
        s.phi.push(r.truth.phi);
        s.eta1.push(r.truth.eta1);
        s.eta2.push(r.truth.eta2);
        s.theta_hat.push(r.estimate.theta);
        s.phi_hat.push(r.estimate.phi);
        s.eta1_hat.push(r.estimate.eta1);
        s.eta2_hat.push(r.estimate.eta2);
        for i in 0..3 {
            s.nu[i].push(r.twist.nu[i]);
            s.omega[i].push(r.twist.omega[i]);
            s.camera[i].push(r.pose.translation[i]);
        }
        s.sig1_sq.push(r.sigma_sq[0]);
        s.sig2_sq.push(r.sigma_sq[1]);
        s.plucker_err.push(r.plucker_error);
    }
    let phi = log.last().map_or(0.0, |r| r.truth.phi);
    let segment = |l: &active_lines::geometry::PluckerLine| {
        let c = l.closest_point();
        let d = l.direction() * 1.5;
        [(c - d).as_slice().to_vec(), (c + d).as_slice().to_vec()]
    };
    serde_json::json!({
        "series": s,
        "summary": summarize(cfg.seed, &log, DEFAULT_THRESHOLD),
        "sigma1_target": achievable_sigma1_sq(&cfg.control.sigma_des_sq, phi),
        "true_line": segment(&log.line_world),
        "estimated_line": log.estimated_world_line().as_ref().map(segment),
    })
    .to_string()
}

/// Control quantities at one state and linear velocity: `Ω_S`, the
/// eigenvalues, `J_ν`, the compensating `ω` and the angle rates it leaves.
#[wasm_bindgen]
pub fn probe(theta: f64, phi: f64, eta1: f64, eta2: f64, nu_x: f64, nu_y: f64, nu_z: f64) -> String {
    let s = match SphericalMoment::new(theta, phi) {
        Ok(s) => s,
        Err(e) => return error_json(e),
    };
    let nu = Vec3::new(nu_x, nu_y, nu_z);
    let x = ReducedLineState::from_parts(&s, eta1, eta2);
    let omega_s = interaction_matrix(&s, &nu);
    let (s1, s2) = eigenvalues(&omega_s);
    let j = jacobian_nu(&s, &nu);
    let omega = match compensating_omega(&x, &nu) {
        Ok(w) => w,
        Err(e) => return error_json(e),
    };
    let rates = spherical_dynamics(&x, &CameraTwist::new(nu, omega));
    let uncompensated = spherical_dynamics(&x, &CameraTwist::new(nu, Vec3::zeros()));
    let defaults = ControlGains::new(1.0, 1.0, [0.08, 0.18]).expect("valid gains");
    serde_json::json!({
        "h_s": s.moment().as_slice(),
        "omega_s": [omega_s[(0, 0)], omega_s[(1, 1)]],
        "sigma_sq": [s1, s2],
        "jacobian": [[j[(0, 0)], j[(0, 1)], j[(0, 2)]], [j[(1, 0)], j[(1, 1)], j[(1, 2)]]],
        "omega": omega.as_slice(),
        "rates_compensated": [rates.d_theta, rates.d_phi],
        "rates_uncompensated": [uncompensated.d_theta, uncompensated.d_phi],
        "sigma1_target": achievable_sigma1_sq(&defaults.sigma_des_sq, phi),
    })
    .to_string()
}

/// Excitation `σ₁²` for a unit-speed linear velocity over a grid of
/// directions: `n_az` azimuths in `[-π, π)` by `n_el` elevations in
/// `(-π/2, π/2)`, row-major by elevation. Empty on invalid angles.
#[wasm_bindgen]
pub fn excitation_sweep(theta: f64, phi: f64, n_az: usize, n_el: usize) -> Vec<f64> {
    let Ok(s) = SphericalMoment::new(theta, phi) else {
        return Vec::new();
    };
    let mut out = Vec::with_capacity(n_az * n_el);
    for i in 0..n_el {
        let el = -0.5 * PI + PI * (i as f64 + 0.5) / n_el as f64;
        for k in 0..n_az {
            let az = -PI + 2.0 * PI * k as f64 / n_az as f64;
            let nu = Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
            out.push(excitation_level(&interaction_matrix(&s, &nu)));
        }
    }
    out
}
