//! Active estimation of the 3D structure of straight lines seen by a moving
//! monocular camera.
//!
//! The line is carried in binormalized Plücker form `(d, h, l)`. Its moment
//! vector `h` is the only part visible in the image; it is parametrized by two
//! spherical angles, and the inverse-depth-scaled direction `χ = d / l` is
//! projected onto an orthonormal basis built from `h`. That leaves a four
//! dimensional state `(θ, φ, η₁, η₂)` in which `hᵀd = 0` holds by construction
//! and which is observable whenever the camera translates out of the line's
//! interpretation plane.
//!
//! Modules, bottom-up:
//! - [`geometry`]: line construction and the change of coordinates.
//! - [`dynamics`]: apparent-motion models, ground truth and integrators.
//! - [`observer`]: the nonlinear observer and its gain rule.
//! - [`control`]: eigenvalue regulation and angular-velocity compensation.
//! - [`sim`]: closed-loop scenarios and trajectory logs.
//! - [`config`], [`summary`]: scenario files and batch reporting.
//! - [`selfcheck`]: runtime oracle suite.

pub mod config;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod observer;
pub mod selfcheck;
pub mod sim;
pub mod summary;

pub use error::{LineError, Result};
pub use geometry::{LineBasis, PluckerLine, ReducedLineState, SphericalMoment};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
