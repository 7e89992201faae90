use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Rotation angle at or beyond the principal branch of the logarithm.
    #[error("se3 log is ambiguous: rotation angle {angle} is within 1e-6 of pi")]
    LogBranch { angle: f64 },

    #[error("parse error at line {line}, field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error(
        "topology error: body {body} has parent {parent}, parents must precede their children"
    )]
    Topology { body: usize, parent: usize },

    #[error("inertia of body {body} is not symmetric positive definite ({reason})")]
    NonSpdInertia { body: usize, reason: String },

    #[error("invalid joint on body {body}: {reason}")]
    InvalidJoint { body: usize, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Composite or articulated inertia that cannot be inverted.
    #[error("singular inertia: {0}")]
    SingularInertia(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
