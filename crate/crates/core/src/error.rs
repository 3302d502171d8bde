use thiserror::Error;

use crate::evaluator::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("job {job}: no eligible machine for stage {stage}")]
    NoEligibleMachine { job: u32, stage: u8 },

    #[error("inconsistent machine sequences: {0}")]
    Sequence(String),

    #[error("precedence cycle through {0}")]
    Cycle(String),

    #[error("schedule is infeasible ({} violation(s))", .0.len())]
    Infeasible(Vec<Violation>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
