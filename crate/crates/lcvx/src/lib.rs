//! Lossless convexification problems: the minimum-effort double integrator
//! and 3-DoF powered descent guidance, plus checks of the LCvx conditions.

pub mod conditions;
pub mod golden;
pub mod pdg;
pub mod toy;

pub use conditions::{controllability_check, rank, transversality_check, ConditionReport};
pub use golden::{golden_section, GoldenResult};
pub use pdg::{
    build_pdg, golden_search_tf, propagate_pdg, propagate_pdg_nodes, solve_pdg, PdgNodes, PdgParams, PdgPropagation,
    PdgSolution,
};
pub use toy::{optimal_toy_time, solve_toy, ToyParams, ToySolution};

use trajopt_conic::{ConicError, Status};

#[derive(Debug, thiserror::Error)]
pub enum LcvxError {
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("conic solve returned {status:?} at tf = {tf}")]
    Solve { tf: f64, status: Status },
    #[error("no feasible point in [{lo}, {hi}]")]
    NoFeasiblePoint { lo: f64, hi: f64 },
    #[error("integration failed: {0}")]
    Integration(String),
}

/// Largest gap `σ_k − ‖u_k‖` over nodes `k ≥ 2` (the first node is exempt,
/// see [`node_gaps`] for every node).
pub fn lcvx_equality_gap(sigma: &[f64], u: &[Vec<f64>]) -> f64 {
    node_gaps(sigma, u).into_iter().skip(1).fold(0.0, f64::max)
}

/// `σ_k − ‖u_k‖` at every node.
pub fn node_gaps(sigma: &[f64], u: &[Vec<f64>]) -> Vec<f64> {
    sigma
        .iter()
        .zip(u)
        .map(|(s, uk)| s - uk.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}
