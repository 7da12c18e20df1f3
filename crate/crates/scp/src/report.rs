use serde::{Deserialize, Serialize};
use trajopt_conic::Status;
use trajopt_ocp::TrajectoryIterate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Scvx,
    Gusto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// A stopping test fired.
    Converged,
    /// The iteration budget ran out first.
    MaxIterations,
    /// GuSTO only: λ exceeded λ_max.
    PenaltyOverflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub formulate_ms: f64,
    pub discretize_ms: f64,
    pub solve_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub status: Status,
    pub iterations: u32,
    pub reduced_accuracy: bool,
    pub kkt_residual: f64,
    pub num_vars: usize,
    pub num_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// `L_λ*`, the convex model cost at the subproblem solution
    pub cost_linear: f64,
    /// `J̄_λ`, the nonlinear cost at the reference
    pub cost_reference: f64,
    /// `J_λ*`, the nonlinear cost at the subproblem solution
    pub cost_nonlinear: f64,
    /// `None` when a stopping test or the small-denominator guard fired first
    pub rho: Option<f64>,
    pub eta: f64,
    pub eta_next: f64,
    pub lambda: f64,
    pub lambda_next: f64,
    pub accepted: bool,
    pub converged: bool,
    /// SCvx: largest scaled virtual control of the solution
    pub virtual_norm: Option<f64>,
    /// GuSTO: the soft trust region was exceeded
    pub trust_violated: Option<bool>,
    /// GuSTO: a state or nonconvex constraint was violated
    pub state_violated: Option<bool>,
    pub solver: SolveStats,
    pub timing: Timing,
}

impl IterationRecord {
    /// `J̄_λ − L_λ*`
    pub fn predicted_decrease(&self) -> f64 {
        self.cost_reference - self.cost_linear
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScpReport {
    pub algorithm: Algorithm,
    pub outcome: Outcome,
    pub iterations: Vec<IterationRecord>,
    /// Last accepted iterate, with virtual controls for SCvx.
    pub trajectory: TrajectoryIterate,
    pub final_lambda: f64,
    pub final_eta: f64,
    /// SCvx: scaled virtual-control norm of `trajectory`
    pub virtual_norm: Option<f64>,
    pub total: Timing,
}

impl ScpReport {
    pub fn accepted(&self) -> impl Iterator<Item = &IterationRecord> {
        self.iterations.iter().filter(|r| r.accepted)
    }
}
