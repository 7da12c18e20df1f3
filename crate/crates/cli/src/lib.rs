//! Case configs, dispatch to the LCvx and SCP solvers, verification by
//! nonlinear propagation, and artifact output for the `trajopt` binary.

pub mod config;
pub mod emit;
pub mod run;
pub mod verify;

pub use config::{parse_config, parse_config_str, AlgorithmChoice, Case, ConfigError, Resolved, RunConfig};
pub use emit::{emit, CONVERGENCE_HEADER};
pub use run::{run_case, verify_trajectory, RunOutcome, RunOutput, RunReport, TrajectoryArtifact, Verdict};
pub use verify::{propagate_and_verify, Checks, Vehicle};
