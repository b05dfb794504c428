//! Apparent motion of a line seen by a moving camera.
//!
//! Three equivalent formulations are provided: the full Plücker form, the
//! `(h, χ)` form with `χ = d/l`, and the four-dimensional spherical form the
//! observer runs on. Ground truth is not obtained by integrating any of them;
//! [`transform_line`] re-expresses the world-fixed line in the current camera
//! frame, and [`integrate_pose`] moves the camera with the closed-form SE(3)
//! exponential.
//!
//! # Twist convention
//!
//! The line dynamics are written as `ḋ = ω × d`, i.e. `(ν, ω)` is the motion
//! of the scene relative to the camera. A camera moving through a static
//! scene with velocity `u` (camera frame) produces the relative twist
//! [`CameraTwist::apparent`], which is `-u`. [`integrate_pose`] and the
//! controller work with the camera velocity itself.

use serde::{Deserialize, Serialize};

use crate::geometry::{
    phi_in_band, wrap_angle, PluckerLine, ReducedLineState, SphericalMoment, DEGENERATE_TOL,
};
use crate::{LineError, Mat2, Mat3, Result, Vec3};

/// Linear (m/s) and angular (rad/s) velocity, both in the camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CameraTwist {
    pub nu: Vec3,
    pub omega: Vec3,
}

impl CameraTwist {
    pub fn new(nu: Vec3, omega: Vec3) -> Self {
        Self { nu, omega }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Relative scene twist induced by this camera velocity.
    pub fn apparent(&self) -> Self {
        Self {
            nu: -self.nu,
            omega: -self.omega,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.nu.iter().chain(self.omega.iter()).all(|v| v.is_finite())
    }
}

/// Camera-to-world rigid transform: `p_world = rotation · p_cam + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for CameraPose {
    fn default() -> Self {
        Self::identity()
    }
}

impl CameraPose {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Fails unless `rotation` is orthonormal with determinant +1 (to 1e-10).
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        let ortho = (rotation.transpose() * rotation - Mat3::identity()).norm();
        if ortho > 1e-10 || (rotation.determinant() - 1.0).abs() > 1e-10 {
            return Err(LineError::InvalidParameter(
                "pose rotation is not a proper rotation".into(),
            ));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn to_world(&self, p_cam: &Vec3) -> Vec3 {
        self.rotation * p_cam + self.translation
    }

    /// Expresses a camera-frame line in the world frame.
    pub fn line_to_world(&self, line: &PluckerLine) -> Result<PluckerLine> {
        let d = self.rotation * line.direction();
        let m = self.rotation * line.scaled_moment() + self.translation.cross(&d);
        PluckerLine::from_moment(d, m)
    }
}

/// Time derivative of a [`ReducedLineState`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative {
    pub d_theta: f64,
    pub d_phi: f64,
    pub d_eta1: f64,
    pub d_eta2: f64,
}

impl StateDerivative {
    pub fn to_vector(&self) -> nalgebra::Vector4<f64> {
        nalgebra::Vector4::new(self.d_theta, self.d_phi, self.d_eta1, self.d_eta2)
    }

    pub fn from_vector(v: &nalgebra::Vector4<f64>) -> Self {
        Self {
            d_theta: v[0],
            d_phi: v[1],
            d_eta1: v[2],
            d_eta2: v[3],
        }
    }
}

/// Rates of the full Plücker state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluckerRate {
    pub d_dot: Vec3,
    pub h_dot: Vec3,
    pub l_dot: f64,
}

pub fn plucker_dynamics(line: &PluckerLine, u: &CameraTwist) -> PluckerRate {
    let (d, h, l) = (line.direction(), line.moment(), line.depth());
    let dxh = d.cross(&h);
    PluckerRate {
        d_dot: u.omega.cross(&d),
        h_dot: u.omega.cross(&h) - dxh * (u.nu.dot(&h) / l),
        l_dot: u.nu.dot(&dxh),
    }
}

/// `Ω = -(νᵀh)[h]ₓ`, the coupling of `χ` into `ḣ = ω × h + Ωᵀχ`.
pub fn omega_matrix(h: &Vec3, nu: &Vec3) -> Mat3 {
    -h.cross_matrix() * nu.dot(h)
}

/// `(ḣ, χ̇)` with `χ = d/l`.
pub fn reduced_dynamics(h: &Vec3, chi: &Vec3, u: &CameraTwist) -> Result<(Vec3, Vec3)> {
    let residual = h.dot(chi);
    if residual.abs() >= 1e-9 {
        return Err(LineError::ConstraintViolation {
            what: "chi not orthogonal to the moment",
            residual,
        });
    }
    let h_dot = u.omega.cross(h) + omega_matrix(h, &u.nu).transpose() * chi;
    let chi_dot = u.omega.cross(chi) - chi * u.nu.dot(&chi.cross(h));
    Ok((h_dot, chi_dot))
}

/// `Ω_S = νᵀh_S · diag(1/cos φ, 1)`.
pub fn interaction_matrix(s: &SphericalMoment, nu: &Vec3) -> Mat2 {
    let proj = nu.dot(&s.moment());
    Mat2::new(proj / s.phi().cos(), 0.0, 0.0, proj)
}

/// The rotation-only part of the angle dynamics, `-ωᵀ[h_P / cos φ; h_S × h_P]`.
pub fn measured_drift(s: &SphericalMoment, omega: &Vec3) -> nalgebra::Vector2<f64> {
    nalgebra::Vector2::new(
        -omega.dot(&s.perp()) / s.phi().cos(),
        -omega.dot(&s.binormal()),
    )
}

/// `(f_η1, f_η2)` evaluated at the given angles and `η`.
pub fn eta_dynamics(s: &SphericalMoment, eta1: f64, eta2: f64, u: &CameraTwist) -> (f64, f64) {
    let (hs, hp, b) = (s.moment(), s.perp(), s.binormal());
    let (sp, cp) = s.phi().sin_cos();
    let tan_phi = sp / cp;
    let (nu, omega) = (&u.nu, &u.omega);
    let w_term = omega.dot(&(hp * tan_phi + hs));

    let f1 = -w_term * eta2
        + nu.dot(&((hs * tan_phi - hp) * (eta1 * eta2) + b * (eta1 * eta1)));
    let f2 = w_term * eta1
        + nu.dot(&(b * (eta1 * eta2) - hs * (tan_phi * eta1 * eta1) - hp * (eta2 * eta2)));
    (f1, f2)
}

/// Right-hand side of the four-dimensional spherical system.
///
/// Must be evaluated inside the φ band; the cos φ divisions are unguarded.
pub fn spherical_dynamics(x: &ReducedLineState, u: &CameraTwist) -> StateDerivative {
    let s = SphericalMoment::new(x.theta, x.phi)
        .expect("spherical_dynamics evaluated outside the phi band");
    let drift = measured_drift(&s, &u.omega);
    let omega_s = interaction_matrix(&s, &u.nu);
    let (f1, f2) = eta_dynamics(&s, x.eta1, x.eta2, u);
    StateDerivative {
        d_theta: drift[0] + omega_s[(0, 0)] * x.eta1,
        d_phi: drift[1] + omega_s[(1, 1)] * x.eta2,
        d_eta1: f1,
        d_eta2: f2,
    }
}

/// Analytic ground truth: the world-fixed line seen from `pose`.
pub fn transform_line(line_world: &PluckerLine, pose: &CameraPose) -> Result<PluckerLine> {
    let rt = pose.rotation.transpose();
    let d_w = line_world.direction();
    let d_c = rt * d_w;
    let m_c = rt * (line_world.scaled_moment() - pose.translation.cross(&d_w));
    if m_c.norm() < DEGENERATE_TOL {
        return Err(LineError::DegenerateLine(m_c.norm()));
    }
    PluckerLine::from_moment(d_c, m_c)
}

/// One classical Runge–Kutta step on a fixed-size vector state.
pub fn rk4<const N: usize, F>(
    mut f: F,
    x: &nalgebra::SVector<f64, N>,
    dt: f64,
) -> Result<nalgebra::SVector<f64, N>>
where
    F: FnMut(&nalgebra::SVector<f64, N>) -> Result<nalgebra::SVector<f64, N>>,
{
    let k1 = f(x)?;
    let k2 = f(&(x + k1 * (0.5 * dt)))?;
    let k3 = f(&(x + k2 * (0.5 * dt)))?;
    let k4 = f(&(x + k3 * dt))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// RK4 step of a spherical-state vector field with the twist held constant.
///
/// Every stage is checked against the φ band, and θ is wrapped afterwards.
pub fn rk4_step<F>(field: F, state: &ReducedLineState, u: &CameraTwist, dt: f64) -> Result<ReducedLineState>
where
    F: Fn(&ReducedLineState, &CameraTwist) -> StateDerivative,
{
    if !(dt > 0.0) {
        return Err(LineError::InvalidParameter(format!("dt = {dt}")));
    }
    let next = rk4(
        |v| {
            if !phi_in_band(v[1]) {
                return Err(LineError::PoleSingularity { phi: v[1] });
            }
            Ok(field(&ReducedLineState::from_vector(v), u).to_vector())
        },
        &state.to_vector(),
        dt,
    )?;
    if !phi_in_band(next[1]) {
        return Err(LineError::PoleSingularity { phi: next[1] });
    }
    let mut out = ReducedLineState::from_vector(&next);
    out.theta = wrap_angle(out.theta);
    Ok(out)
}

/// RK4 step of the full Plücker state `(d, h, l)`, without renormalization.
pub fn plucker_rk4_step(line: &PluckerLine, u: &CameraTwist, dt: f64) -> Result<PluckerLine> {
    type V7 = nalgebra::SVector<f64, 7>;
    let pack = |d: &Vec3, h: &Vec3, l: f64| V7::from_column_slice(&[d.x, d.y, d.z, h.x, h.y, h.z, l]);
    let x = pack(&line.direction(), &line.moment(), line.depth());
    let next = rk4(
        |v| {
            let d = Vec3::new(v[0], v[1], v[2]);
            let h = Vec3::new(v[3], v[4], v[5]);
            let l = v[6];
            let dxh = d.cross(&h);
            Ok(pack(
                &u.omega.cross(&d),
                &(u.omega.cross(&h) - dxh * (u.nu.dot(&h) / l)),
                u.nu.dot(&dxh),
            ))
        },
        &x,
        dt,
    )?;
    PluckerLine::new(
        Vec3::new(next[0], next[1], next[2]),
        Vec3::new(next[3], next[4], next[5]),
        next[6],
    )
}

/// Rotation `exp([w]ₓ)` and the SE(3) left Jacobian `V(w)`.
fn so3_exp_and_left_jacobian(w: &Vec3) -> (Mat3, Mat3) {
    let angle_sq = w.norm_squared();
    let angle = angle_sq.sqrt();
    let k = w.cross_matrix();
    let k2 = k * k;
    let (a, b, c) = if angle < 1e-6 {
        // Taylor expansions of sin(x)/x, (1 - cos x)/x², (x - sin x)/x³.
        (
            1.0 - angle_sq / 6.0,
            0.5 - angle_sq / 24.0,
            1.0 / 6.0 - angle_sq / 120.0,
        )
    } else {
        (
            angle.sin() / angle,
            (1.0 - angle.cos()) / angle_sq,
            (angle - angle.sin()) / (angle_sq * angle),
        )
    };
    let rot = Mat3::identity() + k * a + k2 * b;
    let v = Mat3::identity() + k * b + k2 * c;
    (rot, v)
}

/// Moves the camera by the twist `u` (camera velocity, camera frame) held
/// constant for `dt`.
pub fn integrate_pose(pose: &CameraPose, u: &CameraTwist, dt: f64) -> CameraPose {
    let (rot, v) = so3_exp_and_left_jacobian(&(u.omega * dt));
    let mut rotation = pose.rotation * rot;
    // One Gram–Schmidt pass keeps the rotation orthonormal over long runs.
    let c0 = rotation.column(0).normalize();
    let c1 = (rotation.column(1) - c0 * c0.dot(&rotation.column(1))).normalize();
    let c2 = c0.cross(&c1);
    rotation.set_column(0, &c0);
    rotation.set_column(1, &c1);
    rotation.set_column(2, &c2);
    CameraPose {
        rotation,
        translation: pose.translation + pose.rotation * (v * (u.nu * dt)),
    }
}
