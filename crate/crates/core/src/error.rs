use thiserror::Error;

/// Errors raised by geometry mapping, element construction, modal analysis
/// and case handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate quadrilateral: {0}")]
    DegenerateQuad(String),

    #[error("singular Jacobian (det = {det:e}) at theta = ({}, {})", theta[0], theta[1])]
    SingularJacobian { det: f64, theta: [f64; 2] },

    #[error("opposite edges are parallel, pole lies at infinity")]
    ParallelPole,

    #[error(
        "Newton iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate pole configuration: condition estimate {0:e} exceeds 1e12")]
    DegeneratePoles(f64),

    #[error("unsupported Gauss order {0} (supported: 1..=6)")]
    GaussOrder(usize),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("node {node} appears in conflicting boundary sets ({first} vs {second})")]
    ConflictingBoundary {
        node: usize,
        first: String,
        second: String,
    },

    #[error("requested {requested} modes but the reduced system has dimension {dimension}")]
    TooManyModes { requested: usize, dimension: usize },

    #[error("pencil is numerically indefinite after spectral shift")]
    IndefinitePencil,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("case file: {0}")]
    Case(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for input validation, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SingularJacobian { .. }
            | Error::NonConvergence { .. }
            | Error::DegeneratePoles(_)
            | Error::IndefinitePencil => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
