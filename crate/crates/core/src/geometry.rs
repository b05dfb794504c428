//! Lines in binormalized Plücker form and the spherical change of coordinates.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::{LineError, Mat3, Result, Vec3};

/// Half-width of the excluded band around `φ = ±π/2`.
pub const POLE_EPSILON: f64 = 1e-6;

/// Tolerance on unit norms and orthogonality when constructing lines.
pub const CONSTRUCTION_TOL: f64 = 1e-9;

/// Relative moment below which a line is taken to pass through the origin.
pub const DEGENERATE_TOL: f64 = 1e-9;

/// `|η|` below which a reduced state is taken to have infinite depth.
pub const INFINITE_DEPTH_TOL: f64 = 1e-12;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Largest admissible `|φ|`.
pub fn phi_limit() -> f64 {
    FRAC_PI_2 - POLE_EPSILON
}

pub fn phi_in_band(phi: f64) -> bool {
    phi.is_finite() && phi.abs() < phi_limit()
}

/// A 3D line in the camera frame: unit direction `d`, unit moment `h` and
/// depth `l` (distance from the optical center, meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PluckerLine {
    d: Vec3,
    h: Vec3,
    l: f64,
}

impl PluckerLine {
    /// Checked constructor. Norms and `hᵀd` must hold to [`CONSTRUCTION_TOL`].
    pub fn new(d: Vec3, h: Vec3, l: f64) -> Result<Self> {
        if !(d.iter().chain(h.iter()).all(|v| v.is_finite()) && l.is_finite()) {
            return Err(LineError::InvalidLine("non-finite component"));
        }
        if (d.norm() - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(LineError::InvalidLine("direction is not unit norm"));
        }
        if (h.norm() - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(LineError::InvalidLine("moment is not unit norm"));
        }
        let dot = h.dot(&d);
        if dot.abs() > CONSTRUCTION_TOL {
            return Err(LineError::ConstraintViolation {
                what: "moment not orthogonal to direction",
                residual: dot,
            });
        }
        if l <= 0.0 {
            return Err(LineError::InvalidLine("depth must be positive"));
        }
        Ok(Self { d, h, l })
    }

    /// Builds a line from its unnormalized moment `m = p × d` and a unit
    /// direction.
    pub fn from_moment(d: Vec3, m: Vec3) -> Result<Self> {
        let l = m.norm();
        if l < DEGENERATE_TOL {
            return Err(LineError::DegenerateLine(l));
        }
        Self::new(d, m / l, l)
    }

    pub fn direction(&self) -> Vec3 {
        self.d
    }

    pub fn moment(&self) -> Vec3 {
        self.h
    }

    pub fn depth(&self) -> f64 {
        self.l
    }

    /// Unnormalized moment `l·h`.
    pub fn scaled_moment(&self) -> Vec3 {
        self.h * self.l
    }

    /// The stacked 6-vector `[d; l·h]`.
    pub fn to_vector(&self) -> nalgebra::Vector6<f64> {
        let m = self.scaled_moment();
        nalgebra::Vector6::new(self.d.x, self.d.y, self.d.z, m.x, m.y, m.z)
    }

    /// The same line with both direction and moment negated.
    pub fn flipped(&self) -> Self {
        Self {
            d: -self.d,
            h: -self.h,
            l: self.l,
        }
    }

    /// Point of the line closest to the origin.
    pub fn closest_point(&self) -> Vec3 {
        self.d.cross(&self.h) * self.l
    }
}

/// Line through `p` with direction `dir` (any nonzero length).
pub fn line_from_point_direction(p: Vec3, dir: Vec3) -> Result<PluckerLine> {
    let dir_norm = dir.norm();
    if !(dir_norm > 0.0) || !dir_norm.is_finite() {
        return Err(LineError::InvalidLine("direction must be nonzero"));
    }
    let m = p.cross(&dir);
    let m_norm = m.norm();
    let scale = p.norm() * dir_norm;
    let relative = if scale > 0.0 { m_norm / scale } else { 0.0 };
    if relative < DEGENERATE_TOL {
        return Err(LineError::DegenerateLine(relative));
    }
    PluckerLine::new(dir / dir_norm, m / m_norm, m_norm / dir_norm)
}

/// Spherical angles of a unit moment vector. The radius is always one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalMoment {
    theta: f64,
    phi: f64,
}

impl SphericalMoment {
    /// `theta` is wrapped into `(-π, π]`; `phi` must lie inside the pole band.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(LineError::InvalidParameter(format!("theta = {theta}")));
        }
        if !phi_in_band(phi) {
            return Err(LineError::PoleSingularity { phi });
        }
        Ok(Self {
            theta: wrap_angle(theta),
            phi,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `h_S = [cos θ cos φ, sin θ cos φ, sin φ]`.
    pub fn moment(&self) -> Vec3 {
        spherical_to_moment(self)
    }

    /// `h_P = [cos θ sin φ, sin θ sin φ, -cos φ]`.
    pub fn perp(&self) -> Vec3 {
        perp_vector(self)
    }

    /// `h_S × h_P = [-sin θ, cos θ, 0]`.
    pub fn binormal(&self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        Vec3::new(-st, ct, 0.0)
    }
}

pub fn moment_to_spherical(h: &Vec3) -> Result<SphericalMoment> {
    let norm = h.norm();
    if (norm - 1.0).abs() > CONSTRUCTION_TOL {
        return Err(LineError::InvalidLine("moment is not unit norm"));
    }
    if h.z.abs() > POLE_EPSILON.cos() {
        return Err(LineError::PoleSingularity {
            phi: h.z.clamp(-1.0, 1.0).asin(),
        });
    }
    SphericalMoment::new(h.y.atan2(h.x), h.z.clamp(-1.0, 1.0).asin())
}

pub fn spherical_to_moment(s: &SphericalMoment) -> Vec3 {
    let (st, ct) = s.theta.sin_cos();
    let (sp, cp) = s.phi.sin_cos();
    Vec3::new(ct * cp, st * cp, sp)
}

pub fn perp_vector(s: &SphericalMoment) -> Vec3 {
    let (st, ct) = s.theta.sin_cos();
    let (sp, cp) = s.phi.sin_cos();
    Vec3::new(ct * sp, st * sp, -cp)
}

/// The orthonormal basis `A` with rows `h_S`, `h_P`, `h_S × h_P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineBasis {
    rows: Mat3,
}

impl LineBasis {
    pub fn matrix(&self) -> &Mat3 {
        &self.rows
    }

    pub fn row(&self, i: usize) -> Vec3 {
        self.rows.row(i).transpose()
    }

    /// `A·v`.
    pub fn project(&self, v: &Vec3) -> Vec3 {
        self.rows * v
    }

    /// `Aᵀ·v`.
    pub fn unproject(&self, v: &Vec3) -> Vec3 {
        self.rows.transpose() * v
    }
}

pub fn basis(s: &SphericalMoment) -> LineBasis {
    let hs = s.moment();
    let hp = s.perp();
    // Cross product computed explicitly; equals s.binormal() up to rounding.
    let b = hs.cross(&hp);
    LineBasis {
        rows: Mat3::from_rows(&[hs.transpose(), hp.transpose(), b.transpose()]),
    }
}

/// The four-dimensional state `(θ, φ, η₁, η₂)`.
///
/// No invariant is enforced on construction: observer estimates may pass
/// through `η = 0` or leave the φ band transiently. [`unreduce`] and
/// [`ReducedLineState::angles`] validate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReducedLineState {
    pub theta: f64,
    pub phi: f64,
    pub eta1: f64,
    pub eta2: f64,
}

impl ReducedLineState {
    pub fn new(theta: f64, phi: f64, eta1: f64, eta2: f64) -> Self {
        Self {
            theta,
            phi,
            eta1,
            eta2,
        }
    }

    pub fn from_parts(s: &SphericalMoment, eta1: f64, eta2: f64) -> Self {
        Self::new(s.theta(), s.phi(), eta1, eta2)
    }

    pub fn angles(&self) -> Result<SphericalMoment> {
        SphericalMoment::new(self.theta, self.phi)
    }

    pub fn to_vector(&self) -> nalgebra::Vector4<f64> {
        nalgebra::Vector4::new(self.theta, self.phi, self.eta1, self.eta2)
    }

    pub fn from_vector(v: &nalgebra::Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// Componentwise `self - other` with the azimuth difference wrapped.
    pub fn error_to(&self, other: &Self) -> nalgebra::Vector4<f64> {
        nalgebra::Vector4::new(
            wrap_angle(self.theta - other.theta),
            self.phi - other.phi,
            self.eta1 - other.eta1,
            self.eta2 - other.eta2,
        )
    }
}

/// Plücker line to `(θ, φ, η₁, η₂)` via `χ = d/l` and `η = A·χ`.
pub fn reduce(line: &PluckerLine) -> Result<ReducedLineState> {
    let chi = line.direction() / line.depth();
    let s = moment_to_spherical(&line.moment())?;
    let eta = basis(&s).project(&chi);
    if eta.x.abs() >= CONSTRUCTION_TOL {
        return Err(LineError::ConstraintViolation {
            what: "chi has a component along the moment",
            residual: eta.x,
        });
    }
    Ok(ReducedLineState::from_parts(&s, eta.y, eta.z))
}

/// Inverse of [`reduce`]: `χ = Aᵀ[0, η₁, η₂]`, `l = 1/‖χ‖`, `d = l·χ`.
pub fn unreduce(x: &ReducedLineState) -> Result<PluckerLine> {
    let eta_norm = x.eta1.hypot(x.eta2);
    if eta_norm < INFINITE_DEPTH_TOL {
        return Err(LineError::InfiniteDepth(eta_norm));
    }
    let s = x.angles()?;
    let chi = basis(&s).unproject(&Vec3::new(0.0, x.eta1, x.eta2));
    let l = 1.0 / chi.norm();
    PluckerLine::new(chi * l, s.moment(), l)
}
