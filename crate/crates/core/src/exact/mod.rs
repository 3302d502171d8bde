//! Exact optimization for small instances and the mixed-integer model
//! export.

mod bnb;
pub mod milp;

pub use bnb::{solve_exact, solve_exact_with, ExactConfig, ExactOutcome, ExactStatus, MAX_JOBS};
pub use milp::{export_milp, MilpModel, ModelCounts, RowViolation};
