use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A matrix handed to `vee` has a symmetric part above tolerance.
    #[error("matrix is not skew-symmetric (symmetric part {0:.3e})")]
    NonSkewInput(f64),
    /// A matrix failed the orthonormality / determinant check.
    #[error("not a rotation matrix: |R^T R - I|_F = {orthogonality:.3e}, det = {det:.12}")]
    NotARotation { orthogonality: f64, det: f64 },
    #[error("negative mass: {0}")]
    NegativeMass(f64),
    #[error("inertia matrix is singular")]
    SingularInertia,
    /// Polar reprojection refused a matrix with non-positive determinant or
    /// near rank deficiency.
    #[error("degenerate matrix for SO(3) reprojection (det = {0:.3e})")]
    DegenerateMatrix(f64),
    /// Net commanded thrust vector is too small to define a body z axis.
    #[error("degenerate thrust: |F| = {0:.3e} N")]
    DegenerateThrust(f64),
    #[error("Euler pitch {pitch:.9} rad is within the gimbal-lock margin")]
    GimbalProximity { pitch: f64 },
    #[error("simulation diverged at t = {t:.4} s: {reason}")]
    Diverged { t: f64, reason: String },
    #[error("metrics window [{0}, {1}] contains no samples")]
    EmptyWindow(f64, f64),
    /// The Lyapunov cross-term constant makes W, W1 or W2 indefinite.
    #[error("Lyapunov weight matrix {which} is not positive definite for c = {c}")]
    IndefiniteW { which: &'static str, c: f64 },
    /// Initial conditions violate a stability gate and no override was given.
    #[error("initial-condition gate violated: {0}")]
    GateViolation(String),
    #[error("parse error at line {line} ({key}): {msg}")]
    Parse {
        line: usize,
        key: String,
        msg: String,
    },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
