//! Nonlinear observer for the spherical line state.
//!
//! The measured angles `(θ, φ)` are tracked through an output-injection term
//! `H_S·s̃`, and the unknowns `(η₁, η₂)` are corrected through `α·Ω_S·s̃`.
//! All geometric quantities are evaluated at the measured angles.

use serde::{Deserialize, Serialize};

use crate::dynamics::{eta_dynamics, interaction_matrix, measured_drift, rk4, CameraTwist};
use crate::geometry::{wrap_angle, ReducedLineState, SphericalMoment};
use crate::{LineError, Mat2, Result};

/// How the gain `H_S` is produced from `Ω_S`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainRule {
    /// `H_S = V·diag(2√α·σᵢ)·Vᵀ`.
    #[default]
    CriticallyDamped,
    /// Constant diagonal gain.
    Fixed { theta: f64, phi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserverGains {
    pub alpha: f64,
    pub gain_rule: GainRule,
}

impl ObserverGains {
    pub fn new(alpha: f64, gain_rule: GainRule) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(LineError::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
        }
        if let GainRule::Fixed { theta, phi } = gain_rule {
            if !(theta > 0.0 && phi > 0.0) {
                return Err(LineError::InvalidParameter("fixed gains must be > 0".into()));
            }
        }
        Ok(Self { alpha, gain_rule })
    }

    pub fn critically_damped(alpha: f64) -> Result<Self> {
        Self::new(alpha, GainRule::CriticallyDamped)
    }

    pub fn gain(&self, omega_s: &Mat2) -> Mat2 {
        match self.gain_rule {
            GainRule::CriticallyDamped => gain_matrix(omega_s, self.alpha),
            GainRule::Fixed { theta, phi } => Mat2::new(theta, 0.0, 0.0, phi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObserverState {
    pub est: ReducedLineState,
}

impl ObserverState {
    pub fn new(est: ReducedLineState) -> Self {
        Self { est }
    }
}

/// `(θ̃, φ̃)`: measurement minus estimate, azimuth wrapped into `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Innovation {
    pub d_theta_err: f64,
    pub d_phi_err: f64,
}

impl Innovation {
    pub fn to_vector(&self) -> nalgebra::Vector2<f64> {
        nalgebra::Vector2::new(self.d_theta_err, self.d_phi_err)
    }
}

pub fn innovation(measured: &SphericalMoment, est: &ObserverState) -> Innovation {
    innovation_from(measured, est.est.theta, est.est.phi)
}

fn innovation_from(measured: &SphericalMoment, theta_hat: f64, phi_hat: f64) -> Innovation {
    Innovation {
        d_theta_err: wrap_angle(measured.theta() - theta_hat),
        d_phi_err: measured.phi() - phi_hat,
    }
}

/// `H_S = V·diag(2√α·σᵢ)·Vᵀ` from the SVD `Ω_S = U·Σ·Vᵀ`.
///
/// Each singular value stays paired with its own right singular vector, so
/// the result does not depend on the order the decomposition returns them in.
pub fn gain_matrix(omega_s: &Mat2, alpha: f64) -> Mat2 {
    let svd = omega_s.svd(false, true);
    let v = svd.v_t.expect("right singular vectors requested").transpose();
    let d = Mat2::from_diagonal(&(svd.singular_values * (2.0 * alpha.sqrt())));
    let h = v * d * v.transpose();
    // Symmetrize away rounding asymmetry.
    (h + h.transpose()) * 0.5
}

/// Smallest eigenvalue of `Ω_S·Ω_Sᵀ`.
pub fn excitation_level(omega_s: &Mat2) -> f64 {
    crate::control::eigenvalues(omega_s).0
}

/// Advances the estimate by one RK4 step of length `dt`.
///
/// `measured` and `u` are held constant over the step; `u` is the relative
/// twist entering the line dynamics (see [`crate::dynamics`]).
pub fn observer_step(
    obs: &ObserverState,
    measured: &SphericalMoment,
    u: &CameraTwist,
    gains: &ObserverGains,
    dt: f64,
) -> Result<ObserverState> {
    if !(dt > 0.0) {
        return Err(LineError::InvalidParameter(format!("dt = {dt}")));
    }
    // Everything except the estimate is frozen at the measurement.
    let omega_s = interaction_matrix(measured, &u.nu);
    let h_s = gains.gain(&omega_s);
    let drift = measured_drift(measured, &u.omega);
    let alpha = gains.alpha;

    let field = |v: &nalgebra::Vector4<f64>| {
        let err = innovation_from(measured, v[0], v[1]).to_vector();
        let eta_hat = nalgebra::Vector2::new(v[2], v[3]);
        let angles = drift + omega_s.transpose() * eta_hat + h_s * err;
        let (f1, f2) = eta_dynamics(measured, v[2], v[3], u);
        let eta = nalgebra::Vector2::new(f1, f2) + omega_s * err * alpha;
        Ok(nalgebra::Vector4::new(angles[0], angles[1], eta[0], eta[1]))
    };
    let next = rk4(field, &obs.est.to_vector(), dt)?;
    let mut est = ReducedLineState::from_vector(&next);
    est.theta = wrap_angle(est.theta);
    Ok(ObserverState { est })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::spherical_dynamics;
    use crate::Vec3;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn innovation_examples() {
        let s = SphericalMoment::new(0.3, -0.2).unwrap();
        let obs = ObserverState::new(ReducedLineState::new(0.3, -0.2, 1.0, 1.0));
        assert_eq!(innovation(&s, &obs), Innovation::default());

        let s = SphericalMoment::new(PI - 0.1, 0.0).unwrap();
        let obs = ObserverState::new(ReducedLineState::new(-PI + 0.1, 0.0, 0.0, 0.0));
        assert!((innovation(&s, &obs).d_theta_err + 0.2).abs() < 1e-12);
    }

    #[test]
    fn wrapped_difference_is_bounded_on_grid() {
        let n = 400;
        for i in 0..=n {
            for j in 0..=n {
                let a = -4.0 * PI + 8.0 * PI * i as f64 / n as f64;
                let b = -4.0 * PI + 8.0 * PI * j as f64 / n as f64;
                let w = wrap_angle(a - b);
                assert!(w.abs() <= PI && w > -PI, "{a} {b} -> {w}");
                // Same angle modulo 2π.
                let k = (a - b - w) / (2.0 * PI);
                assert!((k - k.round()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gain_matrix_examples() {
        let h = gain_matrix(&Mat2::new(2.0, 0.0, 0.0, 1.0), 4.0);
        assert!((h - Mat2::new(8.0, 0.0, 0.0, 4.0)).norm() < 1e-12);
        assert_eq!(gain_matrix(&Mat2::zeros(), 4.0), Mat2::zeros());

        let omega = Mat2::new(-3.0, 0.0, 0.0, 1.0);
        let h = gain_matrix(&omega, 1.0);
        assert!((h - Mat2::new(6.0, 0.0, 0.0, 2.0)).norm() < 1e-12);
        let v = omega.svd(false, true).v_t.unwrap();
        assert!((v * v.transpose() - Mat2::identity()).norm() < 1e-12);
    }

    #[test]
    fn excitation_level_examples() {
        assert!((excitation_level(&Mat2::new(2.0, 0.0, 0.0, 1.0)) - 1.0).abs() < 1e-15);
        assert_eq!(excitation_level(&Mat2::zeros()), 0.0);
    }

    #[test]
    fn gains_validation() {
        assert!(ObserverGains::critically_damped(0.0).is_err());
        assert!(ObserverGains::critically_damped(-1.0).is_err());
        assert!(ObserverGains::new(1.0, GainRule::Fixed { theta: 0.0, phi: 1.0 }).is_err());
        let g = ObserverGains::new(1.0, GainRule::Fixed { theta: 3.0, phi: 2.0 }).unwrap();
        assert_eq!(g.gain(&Mat2::zeros()), Mat2::new(3.0, 0.0, 0.0, 2.0));
    }

    #[test]
    fn zero_twist_at_truth_is_a_fixed_point() {
        let truth = ReducedLineState::new(0.7, -0.4, 0.3, -0.6);
        let s = truth.angles().unwrap();
        let obs = ObserverState::new(truth);
        let g = ObserverGains::critically_damped(2000.0).unwrap();
        let next = observer_step(&obs, &s, &CameraTwist::zero(), &g, 1e-3).unwrap();
        assert_eq!(next, obs);
    }

    #[test]
    fn estimate_at_truth_follows_the_plant() {
        // With est = truth, the correction terms vanish and one observer step
        // equals the plant's first-order motion up to the frozen measurement.
        let truth = ReducedLineState::new(0.2, 0.3, 0.4, -0.3);
        let s = truth.angles().unwrap();
        let u = CameraTwist::new(Vec3::new(0.3, 0.1, -0.2), Vec3::new(0.1, -0.2, 0.3));
        let g = ObserverGains::critically_damped(2000.0).unwrap();
        let dt = 1e-4;
        let next = observer_step(&ObserverState::new(truth), &s, &u, &g, dt).unwrap();
        let rate = spherical_dynamics(&truth, &u).to_vector();
        let fd = truth.error_to(&next.est) / -dt;
        // Discrepancy is O(dt·α) from the innovation built within the step.
        assert!((fd - rate).norm() < 0.5, "{fd:?} vs {rate:?}");
        let first = (fd - rate).norm();
        let next2 = observer_step(&ObserverState::new(truth), &s, &u, &g, dt / 10.0).unwrap();
        let fd2 = truth.error_to(&next2.est) / -(dt / 10.0);
        assert!((fd2 - rate).norm() < first / 5.0);
    }

    proptest! {
        #[test]
        fn gain_matrix_is_symmetric_psd(a in -5.0..5.0f64, b in -5.0..5.0f64, alpha in 0.1..5000.0f64) {
            let h = gain_matrix(&Mat2::new(a, 0.0, 0.0, b), alpha);
            prop_assert!((h - h.transpose()).norm() < 1e-12);
            let eig = h.symmetric_eigenvalues();
            prop_assert!(eig.iter().all(|e| *e >= -1e-9));
            if a.abs() > 1e-6 && b.abs() > 1e-6 {
                prop_assert!(eig.iter().all(|e| *e > 0.0));
            }
            let expect = Mat2::new(a.abs(), 0.0, 0.0, b.abs()) * (2.0 * alpha.sqrt());
            prop_assert!((h - expect).norm() < 1e-9 * (1.0 + expect.norm()));
        }

        #[test]
        fn excitation_matches_eigensolver(
            a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64, d in -5.0..5.0f64,
        ) {
            let m = Mat2::new(a, b, c, d);
            let oracle = (m * m.transpose()).symmetric_eigenvalues().min();
            prop_assert!((excitation_level(&m) - oracle).abs() < 1e-12 * (1.0 + oracle.abs()) + 1e-12);
        }
    }
}
