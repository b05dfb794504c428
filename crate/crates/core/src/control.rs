//! Active estimation: shaping the eigenvalues of `Ω_S·Ω_Sᵀ` through the
//! camera's linear velocity, and holding the measured angles still with the
//! angular velocity.
//!
//! These laws are odd in the velocity, so they apply unchanged to the camera
//! velocity or to the relative twist of [`crate::dynamics`].

use serde::{Deserialize, Serialize};

use crate::dynamics::{CameraPose, CameraTwist};
use crate::geometry::{ReducedLineState, SphericalMoment};
use crate::{LineError, Mat2, Result, Vec3};

/// `|sin φ|` below which [`compensating_omega`] switches to the minimum-norm
/// solution.
pub const COMPENSATION_SIN_EPS: f64 = 1e-3;

/// Relative singular-value cutoff of the Jacobian pseudo-inverse.
pub const PINV_REL_TOL: f64 = 1e-8;

pub type Jacobian = nalgebra::Matrix2x3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlGains {
    pub k1: f64,
    pub k2: f64,
    /// Desired eigenvalues of `Ω_S·Ω_Sᵀ`, smallest first.
    pub sigma_des_sq: [f64; 2],
}

impl ControlGains {
    pub fn new(k1: f64, k2: f64, sigma_des_sq: [f64; 2]) -> Result<Self> {
        if !(k1 > 0.0 && k2 > 0.0) {
            return Err(LineError::InvalidParameter(format!(
                "control gains must be > 0 (k1 = {k1}, k2 = {k2})"
            )));
        }
        let [a, b] = sigma_des_sq;
        if !(a >= 0.0 && b >= a && b.is_finite()) {
            return Err(LineError::InvalidParameter(format!(
                "desired eigenvalues must be >= 0 and nondecreasing, got {sigma_des_sq:?}"
            )));
        }
        Ok(Self { k1, k2, sigma_des_sq })
    }
}

/// Eigenvalues of `Ω·Ωᵀ`, ascending.
pub fn eigenvalues(omega_s: &Mat2) -> (f64, f64) {
    let g = omega_s * omega_s.transpose();
    let mean = 0.5 * (g[(0, 0)] + g[(1, 1)]);
    let radius = (0.5 * (g[(0, 0)] - g[(1, 1)])).hypot(g[(0, 1)]);
    let big = mean + radius;
    if big <= 0.0 {
        return (0.0, 0.0);
    }
    // det(ΩΩᵀ) = det(Ω)², which avoids cancellation in the small one.
    let small = omega_s.determinant().powi(2) / big;
    (small, big)
}

/// Gradients of `(σ₁², σ₂²)` with respect to `ν`, rows ordered to match
/// [`eigenvalues`]: `2(νᵀh_S)·h_Sᵀ` and `2(νᵀh_S)/cos²φ·h_Sᵀ`.
pub fn jacobian_nu(s: &SphericalMoment, nu: &Vec3) -> Jacobian {
    let hs = s.moment();
    let proj = nu.dot(&hs);
    let cos_sq = s.phi().cos().powi(2);
    let row = hs.transpose() * (2.0 * proj);
    Jacobian::from_rows(&[row, row / cos_sq])
}

/// Moore–Penrose pseudo-inverse with singular values below
/// `PINV_REL_TOL · σ_max` dropped.
pub fn pseudo_inverse(j: &Jacobian) -> nalgebra::Matrix3x2<f64> {
    let svd = j.svd(true, true);
    let sigma_max = svd.singular_values.max();
    if !(sigma_max > 0.0) {
        return nalgebra::Matrix3x2::zeros();
    }
    svd.pseudo_inverse(PINV_REL_TOL * sigma_max)
        .expect("both singular-vector sets requested")
}

/// `ν̇ = k₁·J†·(σ²_des − σ²) + k₂·(I₃ − J†J)·ν`.
pub fn linear_accel(s: &SphericalMoment, nu: &Vec3, gains: &ControlGains) -> Vec3 {
    let j = jacobian_nu(s, nu);
    let j_pinv = pseudo_inverse(&j);
    let (s1, s2) = eigenvalues(&crate::dynamics::interaction_matrix(s, nu));
    let err = nalgebra::Vector2::new(gains.sigma_des_sq[0] - s1, gains.sigma_des_sq[1] - s2);
    let projector = crate::Mat3::identity() - j_pinv * j;
    j_pinv * err * gains.k1 + projector * nu * gains.k2
}

/// The `σ₁²` the eigenvalue law settles at for a given `φ`.
///
/// `σ₂²/σ₁² = 1/cos²φ` is fixed by the geometry, so the least-squares
/// solution of `w·x = σ²_des` with `w = [1, 1/cos²φ]` is what the
/// pseudo-inverse drives `σ₁²` to.
pub fn achievable_sigma1_sq(sigma_des_sq: &[f64; 2], phi: f64) -> f64 {
    let ratio = 1.0 / phi.cos().powi(2);
    (sigma_des_sq[0] + ratio * sigma_des_sq[1]) / (1.0 + ratio * ratio)
}

/// Angular velocity that cancels `θ̇` and `φ̇` for the given linear velocity.
///
/// Solves `ωᵀh_P = νᵀh_S·η₁` and `ωᵀ(h_S × h_P) = νᵀh_S·η₂`. Away from
/// `sin φ = 0` this is the solution with zero z component; close to it the
/// minimum-norm solution `νᵀh_S·(η₁h_P + η₂(h_S × h_P))` is used instead.
pub fn compensating_omega(x: &ReducedLineState, nu: &Vec3) -> Result<Vec3> {
    let s = x.angles()?;
    let proj = nu.dot(&s.moment());
    let (st, ct) = s.theta().sin_cos();
    let sp = s.phi().sin();
    if sp.abs() >= COMPENSATION_SIN_EPS {
        Ok(Vec3::new(
            x.eta1 * ct - x.eta2 * st * sp,
            x.eta1 * st + x.eta2 * ct * sp,
            0.0,
        ) * (proj / sp))
    } else {
        Ok((s.perp() * x.eta1 + s.binormal() * x.eta2) * proj)
    }
}

/// Which twist components a platform can actuate, in the platform frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofMask {
    pub linear: [bool; 3],
    pub angular: [bool; 3],
}

impl Default for DofMask {
    fn default() -> Self {
        Self::full()
    }
}

impl DofMask {
    pub fn full() -> Self {
        Self {
            linear: [true; 3],
            angular: [true; 3],
        }
    }

    /// Omnidirectional ground base: translation in x, y; yaw about z.
    pub fn planar() -> Self {
        Self {
            linear: [true, true, false],
            angular: [false, false, true],
        }
    }

    pub fn is_full(&self) -> bool {
        *self == Self::full()
    }
}

fn mask_vec(v: &Vec3, keep: &[bool; 3]) -> Vec3 {
    Vec3::from_fn(|i, _| if keep[i] { v[i] } else { 0.0 })
}

/// Camera twist expressed as the platform-origin twist in platform axes.
/// `mount` is the camera pose in the platform frame.
pub fn to_platform(u: &CameraTwist, mount: &CameraPose) -> CameraTwist {
    let omega = mount.rotation * u.omega;
    let nu = mount.rotation * u.nu - omega.cross(&mount.translation);
    CameraTwist::new(nu, omega)
}

pub fn from_platform(u: &CameraTwist, mount: &CameraPose) -> CameraTwist {
    let rt = mount.rotation.transpose();
    CameraTwist::new(
        rt * (u.nu + u.omega.cross(&mount.translation)),
        rt * u.omega,
    )
}

/// The platform-frame twist with non-actuated components set to zero.
///
/// Rotations that are dropped are not executed, so only the kept rotation
/// contributes a lever-arm term to the platform-origin velocity before the
/// linear axes are masked.
pub fn masked_platform_twist(u: &CameraTwist, m: &DofMask, mount: &CameraPose) -> CameraTwist {
    let omega = mask_vec(&(mount.rotation * u.omega), &m.angular);
    let origin = mount.rotation * u.nu - omega.cross(&mount.translation);
    CameraTwist::new(mask_vec(&origin, &m.linear), omega)
}

/// Projects a camera twist onto what the platform can produce.
pub fn apply_mask(u: &CameraTwist, m: &DofMask, mount: &CameraPose) -> CameraTwist {
    if m.is_full() {
        return *u;
    }
    from_platform(&masked_platform_twist(u, m, mount), mount)
}

/// Camera mount of a forward-looking camera on a ground platform: camera z
/// along platform x, camera x along platform −y, camera y along platform −z.
pub fn forward_mount(offset: Vec3) -> CameraPose {
    CameraPose {
        rotation: crate::Mat3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0),
        translation: offset,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{interaction_matrix, spherical_dynamics};
    use crate::Mat3;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI, SQRT_2};

    fn angles() -> impl Strategy<Value = SphericalMoment> {
        (-PI..PI, -1.45..1.45f64).prop_map(|(t, p)| SphericalMoment::new(t, p).unwrap())
    }

    fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
        (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    /// Central finite differences of `eigenvalues` with respect to ν.
    fn fd_jacobian(s: &SphericalMoment, nu: &Vec3, step: f64) -> Jacobian {
        let mut j = Jacobian::zeros();
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = step;
            let (a1, a2) = eigenvalues(&interaction_matrix(s, &(nu + e)));
            let (b1, b2) = eigenvalues(&interaction_matrix(s, &(nu - e)));
            j[(0, k)] = (a1 - b1) / (2.0 * step);
            j[(1, k)] = (a2 - b2) / (2.0 * step);
        }
        j
    }

    #[test]
    fn eigenvalue_examples() {
        let s = SphericalMoment::new(0.0, FRAC_PI_3).unwrap();
        let (a, b) = eigenvalues(&interaction_matrix(&s, &Vec3::new(2.0, 0.0, 0.0)));
        assert!((a - 1.0).abs() < 1e-14 && (b - 4.0).abs() < 1e-13);
        assert_eq!(eigenvalues(&interaction_matrix(&s, &s.perp())), (0.0, 0.0));
    }

    #[test]
    fn jacobian_example() {
        let s = SphericalMoment::new(0.0, FRAC_PI_3).unwrap();
        let nu = Vec3::new(2.0, 0.0, 0.0);
        let j = jacobian_nu(&s, &nu);
        let r3 = 3f64.sqrt();
        let expect = Jacobian::new(1.0, 0.0, r3, 4.0, 0.0, 4.0 * r3);
        assert!((j - expect).norm() < 1e-13);
        let fd = fd_jacobian(&s, &nu, 1e-6);
        assert!((j - fd).norm() / j.norm() < 1e-6);
        assert_eq!(jacobian_nu(&s, &s.perp()), Jacobian::zeros());
    }

    #[test]
    fn linear_accel_examples() {
        let s = SphericalMoment::new(0.4, 0.3).unwrap();
        // ν along h_S at the achievable target: tracking term is zero and
        // the projector removes the only (h_S) component.
        let target = achievable_sigma1_sq(&[0.08, 0.18], s.phi());
        let nu = s.moment() * target.sqrt();
        let g = ControlGains::new(1.0, 1.0, [0.08, 0.18]).unwrap();
        assert!(linear_accel(&s, &nu, &g).norm() < 1e-12);

        // No excitation: J = 0, the projector is the identity.
        let s0 = SphericalMoment::new(0.0, 0.0).unwrap();
        let nu = Vec3::new(0.0, 0.1, 0.0);
        let g = ControlGains::new(1.0, 1.0, [0.08, 0.18]).unwrap();
        assert!((linear_accel(&s0, &nu, &g) - nu).norm() < 1e-15);
        let nu = Vec3::new(0.0, 0.1, -0.3);
        assert!((linear_accel(&s0, &nu, &g) - nu).norm() < 1e-15);
    }

    #[test]
    fn compensation_examples() {
        let s = SphericalMoment::new(0.0, FRAC_PI_4).unwrap();
        let x = ReducedLineState::from_parts(&s, 1.0, 0.0);
        let w = compensating_omega(&x, &s.moment()).unwrap();
        assert!((w - Vec3::new(SQRT_2, 0.0, 0.0)).norm() < 1e-14);
        assert!((w.dot(&s.perp()) - 1.0).abs() < 1e-14);

        assert_eq!(compensating_omega(&x, &s.perp()).unwrap(), Vec3::zeros());
        for phi in [FRAC_PI_4, 1e-4] {
            let s = SphericalMoment::new(0.3, phi).unwrap();
            let x = ReducedLineState::from_parts(&s, 0.0, 0.0);
            assert_eq!(compensating_omega(&x, &s.moment()).unwrap(), Vec3::zeros());
        }
    }

    #[test]
    fn control_gain_validation() {
        assert!(ControlGains::new(0.0, 1.0, [0.1, 0.2]).is_err());
        assert!(ControlGains::new(1.0, -1.0, [0.1, 0.2]).is_err());
        assert!(ControlGains::new(1.0, 1.0, [0.3, 0.2]).is_err());
        assert!(ControlGains::new(1.0, 1.0, [-0.1, 0.2]).is_err());
        assert!(ControlGains::new(1.0, 1.0, [0.2, 0.2]).is_ok());
    }

    #[test]
    fn mask_examples() {
        let u = CameraTwist::new(Vec3::new(0.1, 0.2, 0.3), Vec3::new(-0.1, 0.4, 0.5));
        let id = CameraPose::identity();
        assert_eq!(apply_mask(&u, &DofMask::full(), &id), u);
        let m = apply_mask(&u, &DofMask::planar(), &id);
        assert_eq!(m.nu, Vec3::new(0.1, 0.2, 0.0));
        assert_eq!(m.omega, Vec3::new(0.0, 0.0, 0.5));
    }

    #[test]
    fn forward_mount_is_a_rotation() {
        let m = forward_mount(Vec3::new(0.2, 0.0, 0.8));
        assert!(CameraPose::new(m.rotation, m.translation).is_ok());
        // Platform yaw appears as rotation about the camera's −y axis.
        let yaw = from_platform(&CameraTwist::new(Vec3::zeros(), Vec3::z()), &m);
        assert!((yaw.omega - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn eigenvalues_match_eigensolver(s in angles(), nu in vec3(2.0)) {
            let m = interaction_matrix(&s, &nu);
            let oracle = (m * m.transpose()).symmetric_eigenvalues();
            let (lo, hi) = (oracle.min(), oracle.max());
            let (a, b) = eigenvalues(&m);
            prop_assert!((a - lo).abs() < 1e-12 * (1.0 + hi));
            prop_assert!((b - hi).abs() < 1e-12 * (1.0 + hi));
            let proj = nu.dot(&s.moment());
            prop_assert!((a - proj * proj).abs() < 1e-12 * (1.0 + hi));
        }

        #[test]
        fn jacobian_matches_finite_differences(s in angles(), nu in vec3(2.0)) {
            prop_assume!(nu.dot(&s.moment()).abs() > 1e-3);
            let j = jacobian_nu(&s, &nu);
            let fd = fd_jacobian(&s, &nu, 1e-6);
            prop_assert!((j - fd).norm() / j.norm() < 1e-6, "{} vs {}", j, fd);
            let sv = j.svd(false, false).singular_values;
            prop_assert!(sv.min() <= 1e-10 * sv.max());
        }

        #[test]
        fn pseudo_inverse_is_consistent(s in angles(), nu in vec3(2.0)) {
            let j = jacobian_nu(&s, &nu);
            let p = pseudo_inverse(&j);
            prop_assert!((p * j * p - p).norm() < 1e-10 * (1.0 + p.norm()));
            prop_assert!((j * p * j - j).norm() < 1e-10 * (1.0 + j.norm()));
            // The null-space term never moves the eigenvalues.
            let null = (Mat3::identity() - p * j) * nu;
            prop_assert!((j * null).norm() < 1e-12 * (1.0 + j.norm()));
        }

        #[test]
        fn compensation_freezes_measured_angles(
            s in angles(),
            nu in vec3(2.0),
            e1 in -3.0..3.0f64,
            e2 in -3.0..3.0f64,
            tiny in proptest::bool::ANY,
        ) {
            // Half the cases land inside the minimum-norm branch.
            let s = if tiny { SphericalMoment::new(s.theta(), s.phi() * 1e-4).unwrap() } else { s };
            let x = ReducedLineState::from_parts(&s, e1, e2);
            let w = compensating_omega(&x, &nu).unwrap();
            let r = spherical_dynamics(&x, &CameraTwist::new(nu, w));
            prop_assert!(r.d_theta.abs() < 1e-12, "theta rate {}", r.d_theta);
            prop_assert!(r.d_phi.abs() < 1e-12, "phi rate {}", r.d_phi);
        }

        #[test]
        fn masked_axes_are_zero(
            nu in vec3(2.0),
            w in vec3(2.0),
            off in vec3(1.0),
        ) {
            let mount = forward_mount(off);
            let u = CameraTwist::new(nu, w);
            let p = masked_platform_twist(&u, &DofMask::planar(), &mount);
            prop_assert_eq!(p.nu.z, 0.0);
            prop_assert_eq!(p.omega.x, 0.0);
            prop_assert_eq!(p.omega.y, 0.0);
            // Projection is idempotent.
            let once = apply_mask(&u, &DofMask::planar(), &mount);
            let twice = apply_mask(&once, &DofMask::planar(), &mount);
            prop_assert!((once.nu - twice.nu).norm() < 1e-12);
            prop_assert!((once.omega - twice.omega).norm() < 1e-12);
            let back = to_platform(&once, &mount);
            prop_assert!(back.nu.z.abs() < 1e-14 && back.omega.x.abs() < 1e-14 && back.omega.y.abs() < 1e-14);
        }

        #[test]
        fn planar_mask_keeps_in_plane_camera_velocity(
            nu in vec3(2.0),
            w in vec3(2.0),
            off in vec3(1.0),
        ) {
            let mount = forward_mount(off);
            let out = apply_mask(&CameraTwist::new(nu, w), &DofMask::planar(), &mount);
            let (a, b) = (mount.rotation * nu, mount.rotation * out.nu);
            prop_assert!((a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12);
            prop_assert!(b.z.abs() < 1e-12);
            prop_assert!((mount.rotation * out.omega - Vec3::new(0.0, 0.0, (mount.rotation * w).z)).norm() < 1e-12);
        }
    }
}
