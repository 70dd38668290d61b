use thiserror::Error;

/// Errors raised by the geometry kernel, the integrators and the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space form parameters: {0}")]
    InvalidParams(String),

    #[error("point violates the lift quadric constraint (residual {residual:.3e})")]
    NormViolation { residual: f64 },

    #[error("vector is not horizontal (residual {residual:.3e})")]
    NotHorizontal { residual: f64 },

    #[error("tangent vectors are attached to different base points")]
    BaseMismatch,

    #[error("zero direction vector")]
    ZeroVector,

    #[error("point is not regular for the torus action (min coordinate modulus {modulus:.3e})")]
    NonRegular { modulus: f64 },

    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),

    #[error("negative radicand {0:.3e} in principal curvature formula")]
    NegativeRadicand(f64),

    #[error("c + 8r^2 must be non-negative (got {0:.3e})")]
    UndefinedRPrime(f64),

    #[error("ODE singularity: {0}")]
    Singularity(String),

    #[error("invalid curvature state: {0}")]
    InvalidState(String),

    #[error("tolerance must be positive (got {0})")]
    InvalidTolerance(f64),

    #[error("finite-difference step {0} outside allowed range")]
    InvalidStep(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("surface is not in the flat Lagrangian family (fit residual {residual:.3e})")]
    NotInFamily { residual: f64 },

    #[error("shape operator asymmetry {0:.3e} exceeds limit")]
    Asymmetry(f64),

    #[error("Hopf degeneracy: J xi is numerically principal (b = {0:.3e})")]
    HopfDegenerate(f64),

    #[error("eigenvalue split is ambiguous (equilateral spectrum)")]
    AmbiguousSplit,

    #[error("distance minimisation did not converge after {0} iterations")]
    MinimizationFailed(usize),

    #[error("matrix exponential argument too large (|t|, |u| must be <= 50)")]
    ExponentialOverflow,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown export format `{0}`")]
    UnknownFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
