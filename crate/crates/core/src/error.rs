use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid scenario space: {0}")]
    InvalidSpace(String),

    #[error("random variables live on different scenario spaces")]
    MismatchedSpace,

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("bad group structure: {0}")]
    BadGroupStructure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("no convergence after {nodes} nodes (last gap {gap:e})")]
    NoConvergence { nodes: usize, gap: f64 },

    #[error("could not bracket a root in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("not differentiable: {0}")]
    NotDifferentiable(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("problem too large for the brute-force oracle: {0}")]
    ScaleTooLarge(String),

    #[error("parse error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<u64>, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
