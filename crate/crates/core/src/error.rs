use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite state at node {node}")]
    NonFinite { node: usize },

    #[error("matrix `{what}` is not symmetric positive definite")]
    NotSpd { what: String },

    #[error("rank of F is zero; every estimate is identically 0")]
    RankZero,

    #[error("W(t, eps) is numerically singular at t = {t} (eps = {eps})")]
    SingularW { t: f64, eps: f64 },

    #[error("Riccati solution blew up at node {node} (t = {t}); refine the grid or increase eps")]
    RiccatiBlowup { node: usize, t: f64 },

    #[error("I + K(T, eps) is numerically singular")]
    SingularTerminal,

    #[error("filter diverged at node {node}")]
    FilterDiverged { node: usize },

    #[error("no admissible adjoint solution: residual {residual:.3e} exceeds tolerance {tolerance:.3e}, the worst-case error is infinite")]
    Infinite { residual: f64, tolerance: f64 },

    #[error("scenario violates the algebraic constraint at node {node}: residual {residual:.3e}")]
    InconsistentScenario { node: usize, residual: f64 },

    #[error("eps = {0} is below the supported floor 1e-12; enable compensated mode or refine the grid")]
    EpsTooSmall(f64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
