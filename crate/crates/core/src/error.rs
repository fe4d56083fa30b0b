use thiserror::Error;

/// Errors produced by the observer library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input matrix has non-positive determinant and cannot be rescaled onto SL(3).
    #[error("degenerate homography: determinant {det} is not positive")]
    DegenerateHomography { det: f64 },

    /// A matrix expected to be traceless is not.
    #[error("matrix is not traceless: tr = {trace}")]
    NotTraceless { trace: f64 },

    /// A matrix expected to have unit determinant does not.
    #[error("matrix is not in SL(3): det = {det}")]
    NotUnitDeterminant { det: f64 },

    /// Attempted to project the zero vector onto the sphere.
    #[error("degenerate direction: cannot normalize the zero vector")]
    DegenerateDirection,

    /// Ray points away from (or grazes) the image plane.
    #[error("ray behind camera: e3'x = {z} <= eps_z")]
    BehindCamera { z: f64 },

    /// Plane normal must be a unit vector.
    #[error("plane normal is not unit length: |eta| = {norm}")]
    NonUnitNormal { norm: f64 },

    /// Requested pixel rectangle contains no pixels or leaves the image.
    #[error("empty or out-of-bounds region: {0}")]
    EmptyRegion(String),

    /// Too few warped samples land inside the current frame.
    #[error("no overlap: {valid} of {total} samples in frame")]
    NoOverlap { valid: usize, total: usize },

    /// NoOverlap hit mid-run; carries the step index for diagnostics.
    #[error("estimate diverged at step {step}: only {valid} of {total} samples overlap")]
    Diverged {
        step: usize,
        valid: usize,
        total: usize,
    },

    /// Configuration problem (bad key, bad value, inconsistent inputs).
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image decode error: {0}")]
    ImageDecode(String),
}

pub type Result<T> = std::result::Result<T, Error>;
