use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid weight law: {0}")]
    InvalidLaw(String),

    #[error("moment of order {order} is infinite for tail index {tail_index}")]
    InfiniteMoment { order: u32, tail_index: f64 },

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degree {0} unreachable in limit law (a(k) = b(k) = 0)")]
    Unreachable(usize),

    #[error("{what} requires Pareto laws")]
    NotPareto { what: &'static str },

    #[error("edge budget exceeded: projection needs more than {budget} edge insertions")]
    EdgeBudget { budget: u64 },

    #[error("all {0} replicates failed")]
    AllReplicatesFailed(usize),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
