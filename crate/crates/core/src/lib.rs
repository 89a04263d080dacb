//! Best k-subset linear regression with statistical diagnostics enforced
//! during the search.

pub mod altsol;
pub mod baselines;
pub mod bounds;
pub mod cli;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod report;
pub mod solver;

pub use data::{Dataset, LogShift};
pub use error::{Error, Result};
pub use linalg::FitResult;
pub use solver::{solve_base, solve_lazy, solve_penalty, SolveOutcome, SolverConfig, Status};
