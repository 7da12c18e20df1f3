//! Convex programs in the form `min qᵀx s.t. A x + c ∈ K`, where `K` is a
//! product of zero, nonnegative and second-order cones, plus a solver binding.

mod kkt;
mod program;
mod solve;

pub use kkt::{certificate_residual, cone_distance, kkt_residuals, project_soc, Residuals};
pub use program::{assemble, Cone, ConeSpec, ConicProgram, LinExpr, ProgramBuilder, Row, RowCone, Triplets};
pub use solve::{solve, ConicSolution, SolverSettings, Status};

#[derive(Debug, thiserror::Error)]
pub enum ConicError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("row {row}: {reason}")]
    Assembly { row: usize, reason: String },
    #[error("invalid solver settings: {0}")]
    Settings(String),
}
