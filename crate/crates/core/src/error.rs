use thiserror::Error;

/// Errors produced by the solver and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vacuum state (rho = {rho:e} below floor {floor:e}): Riemann invariants undefined")]
    Vacuum { rho: f64, floor: f64 },

    #[error("interval endpoints out of order: lambda1 = {lambda1} > lambda2 = {lambda2}")]
    Ordering { lambda1: f64, lambda2: f64 },

    #[error("no admissible {family}-shock from rho = {rho} to rho* = {rho_star} (wrong compression direction)")]
    Admissibility { family: u8, rho: f64, rho_star: f64 },

    #[error("root finder did not converge after {iterations} iterations (bracket [{lo}, {hi}])")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("CFL violation: dt = {dt:e} exceeds dx / L = {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("unsupported scheme: {0}")]
    UnsupportedScheme(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("step {index}: {source}")]
    Step {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
