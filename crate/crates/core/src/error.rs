use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("lattice size must be odd and at least 3, got {0}")]
    LatticeSize(usize),

    #[error("Fock truncation {0} is too small (need at least 8)")]
    FockTooSmall(usize),

    #[error("step size rejected: dt * |H| = {product:.4} exceeds {limit}")]
    StepTooLarge { product: f64, limit: f64 },

    #[error("truncation guard failed at t = {time}: population {population:.3e} in the top Fock levels")]
    TruncationGuard { time: f64, population: f64 },

    #[error("sample time {0} not present in record")]
    MissingSample(f64),

    #[error("field has zero mass")]
    ZeroMass,

    #[error("{fraction:.3} of characteristics escaped the trusted region (limit {limit})")]
    EscapedCharacteristics { fraction: f64, limit: f64 },

    #[error("point ({q}, {p}) is not a fixed point (|flow| = {residual:.3e})")]
    NotFixedPoint { q: f64, p: f64, residual: f64 },

    #[error("no saddle fixed point exists for these parameters")]
    NoSaddle,

    #[error("no real solution: {0}")]
    NoRealSolution(String),

    #[error("degenerate Jacobian at saddle")]
    DegenerateJacobian,

    #[error("coincident saddles")]
    CoincidentSaddles,

    #[error("bracket [{lo}, {hi}] does not change classification")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}

pub type Result<T> = std::result::Result<T, Error>;
