use thiserror::Error;

pub type Result<T, E = LineError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineError {
    /// The line passes (numerically) through the optical center, so the
    /// moment vector is undefined and the depth is zero.
    #[error("degenerate line: passes through the camera center (relative moment {0:e})")]
    DegenerateLine(f64),

    /// The moment vector is too close to the ±z axis for the azimuth to be
    /// defined.
    #[error("moment vector at the spherical pole (phi = {phi:.9})")]
    PoleSingularity { phi: f64 },

    #[error("constraint violated: {what} (residual {residual:e})")]
    ConstraintViolation { what: &'static str, residual: f64 },

    #[error("reduced state has infinite depth (|eta| = {0:e})")]
    InfiniteDepth(f64),

    #[error("invalid line: {0}")]
    InvalidLine(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no valid scenario after {0} draws")]
    ScenarioExhausted(usize),
}
