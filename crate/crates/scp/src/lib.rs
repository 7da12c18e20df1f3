//! Sequential convex programming: the SCvx and GuSTO loops over a
//! [`trajopt_ocp::Ocp`].

mod common;
pub mod gusto;
pub mod norm;
pub mod penalty;
pub mod report;
pub mod scvx;

pub use common::{project_guess, trapz_weights, LinearizedCost};
pub use gusto::GustoConfig;
pub use norm::Norm;
pub use penalty::{h_penalty, penalty, PenaltyKind};
pub use report::{Algorithm, IterationRecord, Outcome, ScpReport, SolveStats, Timing};
pub use scvx::ScvxConfig;

use trajopt_conic::{ConicError, Status};
use trajopt_ocp::OcpError;

#[derive(Debug, thiserror::Error)]
pub enum ScpError {
    #[error(transparent)]
    Ocp(#[from] OcpError),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("subproblem at iteration {iter} returned {status:?}")]
    Subproblem { iter: usize, status: Status },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("problem does not fit the algorithm: {0}")]
    Formulation(String),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}
