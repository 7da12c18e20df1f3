//! Continuous-time optimal control problem template, trajectory iterates,
//! variable scaling and exact ZOH/FOH discretization of linearized dynamics.

pub mod constraint;
pub mod discretize;
pub mod fd;
pub mod grid;
pub mod iterate;
pub mod numeric;
pub mod problem;
pub mod scaling;

pub use constraint::{AffineForm, ConvexConstraint, Var};
pub use discretize::{
    check_consistency, defects, discretize, flow_map, Boundary, FlowSamples, LinearizedSegmentSet, NodeLinearization,
    PropagationResult, Scheme, Segment,
};
pub use grid::TimeGrid;
pub use iterate::{straight_line_guess, TrajectoryIterate, Virtuals};
pub use numeric::trapz;
pub use problem::{running_cost, running_cost_gradients, Dims, Ocp, TimeDilation};
pub use scaling::{make_scaling, Bounds, ScalingMap};

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;

#[derive(Debug, thiserror::Error)]
pub enum OcpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },
    #[error("non-finite {matrix} at node {node}")]
    NonFinite { node: usize, matrix: &'static str },
    #[error("time dilation must be positive, got {0}")]
    NonPhysicalDilation(f64),
    #[error("sequence needs at least two samples, got {0}")]
    TooShort(usize),
    #[error("{0}")]
    Invalid(String),
}
