//! Case dispatch: resolve a config, solve, verify the final trajectory and
//! assemble the report and trajectory artifact.

use std::time::Instant;

use anyhow::Context;
use nalgebra::dvector;
use serde::{Deserialize, Serialize};
use trajopt_lcvx::{golden_search_tf, solve_toy, PdgParams, PdgSolution, ToyParams, ToySolution};
use trajopt_ocp::{make_scaling, running_cost, trapz, TimeGrid, TrajectoryIterate, Vector};
use trajopt_scp::{gusto, scvx, IterationRecord, Outcome, ScpReport, Timing};
use trajopt_vehicles::{FreeFlyer, Quadrotor};

use crate::config::{AlgorithmChoice, Case, Problem, Resolved, RunConfig, SolverChoice};
use crate::verify::{propagate_and_verify, verify_pdg, verify_toy, Checks, DenseInterval, Vehicle};

/// Largest scaled virtual-control norm a converged SCvx run may keep.
pub const VIRTUAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    /// A single convex solve (LCvx cases).
    Solved,
    Converged,
    MaxIterations,
    PenaltyOverflow,
}

impl From<Outcome> for RunOutcome {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Converged => RunOutcome::Converged,
            Outcome::MaxIterations => RunOutcome::MaxIterations,
            Outcome::PenaltyOverflow => RunOutcome::PenaltyOverflow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Feasible,
    SoftFailure,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Feasible => 0,
            Verdict::SoftFailure => 2,
        }
    }
}

/// Case-specific headline numbers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Objective without penalty terms: terminal cost plus integrated running cost.
    pub cost: f64,
    /// Integrated running cost alone (control effort).
    pub running_cost: f64,
    pub final_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub virtual_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fuel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub propagated_final_mass: Option<f64>,
    /// Smallest and largest physical thrust over the nodes (N).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thrust_range: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub glideslope_active: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub case: Case,
    pub algorithm: AlgorithmChoice,
    pub outcome: RunOutcome,
    pub verdict: Verdict,
    /// Why the verdict is a soft failure; empty when feasible.
    pub reasons: Vec<String>,
    pub iterations: Vec<IterationRecord>,
    pub checks: Checks,
    pub summary: Summary,
    pub timing: Timing,
}

/// Nodes in normalized time plus dense propagation, readable back as a
/// [`TrajectoryIterate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryArtifact {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub p: Vec<f64>,
    /// Node times in seconds.
    pub time: Vec<f64>,
    pub state_names: Vec<String>,
    pub input_names: Vec<String>,
    pub dense: Vec<DenseInterval>,
}

impl TrajectoryArtifact {
    fn new(it: &TrajectoryIterate, final_time: f64, names: (&[&str], &[&str]), dense: Vec<DenseInterval>) -> Self {
        let rows = |v: &[Vector]| v.iter().map(|r| r.iter().copied().collect()).collect();
        let t = it.grid.times();
        Self {
            time: t.iter().map(|t| t * final_time).collect(),
            t,
            x: rows(&it.x),
            u: rows(&it.u),
            p: it.p.iter().copied().collect(),
            state_names: names.0.iter().map(|s| s.to_string()).collect(),
            input_names: names.1.iter().map(|s| s.to_string()).collect(),
            dense,
        }
    }

    pub fn iterate(&self) -> anyhow::Result<TrajectoryIterate> {
        Ok(serde_json::from_value(serde_json::to_value(self)?)?)
    }
}

pub struct RunOutput {
    pub report: RunReport,
    pub artifact: TrajectoryArtifact,
}

pub fn state_names(case: Case) -> (&'static [&'static str], &'static [&'static str]) {
    match case {
        Case::LcvxToy => (&["x1", "x2"], &["u", "sigma"]),
        Case::LcvxPdg => (&["rx", "ry", "rz", "vx", "vy", "vz", "z"], &["ux", "uy", "uz", "xi"]),
        Case::Quadrotor => (&["rx", "ry", "rz", "vx", "vy", "vz"], &["ax", "ay", "az", "sigma"]),
        Case::Freeflyer => (
            &["rx", "ry", "rz", "vx", "vy", "vz", "qx", "qy", "qz", "qw", "wx", "wy", "wz"],
            &["Tx", "Ty", "Tz", "Mx", "My", "Mz"],
        ),
    }
}

/// Builds the vehicle problem of a resolved config on `nodes` nodes.
pub fn vehicle(problem: &Problem, nodes: usize) -> anyhow::Result<Vehicle> {
    Ok(match problem {
        Problem::Quadrotor { params, .. } => Vehicle::Quadrotor(Quadrotor::new(params.clone())?),
        Problem::Freeflyer { params, .. } => Vehicle::Freeflyer(FreeFlyer::new(params.clone(), TimeGrid::new(nodes)?)?),
        _ => anyhow::bail!("not a vehicle case"),
    })
}

fn toy_iterate(sol: &ToySolution) -> anyhow::Result<TrajectoryIterate> {
    let n = sol.t.len();
    let x = (0..n).map(|k| dvector![sol.x1[k], sol.x2[k]]).collect();
    let u = (0..n).map(|k| dvector![sol.u[k], sol.sigma[k]]).collect();
    Ok(TrajectoryIterate::new(TimeGrid::new(n)?, x, u, dvector![sol.params.tf])?)
}

fn pdg_iterate(sol: &PdgSolution) -> anyhow::Result<TrajectoryIterate> {
    let n = sol.t.len();
    let x = (0..n)
        .map(|k| {
            let (r, v) = (sol.r[k], sol.v[k]);
            Vector::from_vec(vec![r[0], r[1], r[2], v[0], v[1], v[2], sol.z[k]])
        })
        .collect();
    let u = (0..n).map(|k| dvector![sol.u[k][0], sol.u[k][1], sol.u[k][2], sol.xi[k]]).collect();
    Ok(TrajectoryIterate::new(TimeGrid::new(n)?, x, u, dvector![sol.tf])?)
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn run_toy(params: &ToyParams) -> anyhow::Result<(TrajectoryIterate, Summary, Timing)> {
    let start = Instant::now();
    let sol = solve_toy(params).context("lcvx-toy")?;
    let timing = Timing { solve_ms: ms(start), ..Default::default() };
    let summary = Summary { cost: sol.cost, running_cost: sol.cost, final_time: params.tf, ..Default::default() };
    Ok((toy_iterate(&sol)?, summary, timing))
}

fn run_pdg(params: &PdgParams, bracket: (f64, f64)) -> anyhow::Result<(TrajectoryIterate, Summary, Timing)> {
    let start = Instant::now();
    let (tf, sol) = golden_search_tf(params, bracket).context("lcvx-pdg")?;
    let timing = Timing { solve_ms: ms(start), ..Default::default() };
    let thrust = sol.thrust.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    let summary = Summary {
        cost: sol.cost,
        running_cost: sol.cost,
        final_time: tf,
        fuel: Some(sol.fuel),
        thrust_range: Some(thrust),
        glideslope_active: Some(sol.glideslope_active),
        ..Default::default()
    };
    Ok((pdg_iterate(&sol)?, summary, timing))
}

fn scp_summary(v: &Vehicle, rep: &ScpReport) -> anyhow::Result<Summary> {
    let (ocp, it) = (v.ocp(), &rep.trajectory);
    let gamma: Vec<f64> = (0..it.len()).map(|k| running_cost(ocp, &it.x[k], &it.u[k], &it.p)).collect();
    let running = trapz(&gamma, it.grid.dt())?;
    let (cx, cp) = ocp.terminal_cost();
    let terminal = cx.dot(it.x.last().expect("nonempty")) + cp.dot(&it.p);
    Ok(Summary {
        cost: terminal + running,
        running_cost: running,
        final_time: it.p[0],
        virtual_norm: rep.virtual_norm,
        final_lambda: Some(rep.final_lambda),
        final_eta: Some(rep.final_eta),
        ..Default::default()
    })
}

/// Verifies a trajectory of any case against the resolved problem.
pub fn verify_trajectory(resolved: &Resolved, it: &TrajectoryIterate) -> anyhow::Result<Checks> {
    Ok(match &resolved.problem {
        Problem::Toy(p) => verify_toy(p, it)?.checks,
        Problem::Pdg { params, .. } => verify_pdg(params, it)?.checks,
        problem => propagate_and_verify(&vehicle(problem, it.len())?, it, resolved.scheme)?.checks,
    })
}

/// Solves and verifies one case. Deterministic for a given config.
pub fn run_case(cfg: &RunConfig) -> anyhow::Result<RunOutput> {
    let resolved = cfg.resolve()?;
    let case = cfg.case;
    let names = state_names(case);
    log::info!("running {} with {:?}", case.name(), cfg.algorithm());

    let (it, summary, timing, iterations, outcome, mut reasons, dense, checks) = match &resolved.problem {
        Problem::Toy(params) => {
            let (it, summary, timing) = run_toy(params)?;
            let ver = verify_toy(params, &it)?;
            (it, summary, timing, Vec::new(), RunOutcome::Solved, Vec::new(), ver.dense, ver.checks)
        }
        Problem::Pdg { params, bracket } => {
            let (it, mut summary, timing) = run_pdg(params, *bracket)?;
            let ver = verify_pdg(params, &it)?;
            let prop = ver.dense.last().and_then(|d| d.x.last()).map(|x| x[6].exp());
            summary.propagated_final_mass = prop;
            (it, summary, timing, Vec::new(), RunOutcome::Solved, Vec::new(), ver.dense, ver.checks)
        }
        Problem::Quadrotor { nodes, .. } | Problem::Freeflyer { nodes, .. } => {
            let v = vehicle(&resolved.problem, *nodes)?;
            let grid = TimeGrid::new(*nodes)?;
            let guess = v.guess(grid)?;
            let sm = make_scaling(&v.ocp().scaling_bounds())?;
            let mut reasons = Vec::new();
            let rep = match &resolved.solver {
                SolverChoice::Scvx(c) => {
                    let rep = scvx::run(v.ocp(), &guess, c, &sm, resolved.scheme).context(case.name())?;
                    if rep.outcome == Outcome::MaxIterations && !c.fixed_iterations() {
                        reasons.push(format!("no convergence in {} iterations", c.max_iters));
                    }
                    match rep.virtual_norm {
                        Some(vn) if vn > VIRTUAL_TOL => reasons.push(format!("virtual control norm {vn:.3e}")),
                        _ => {}
                    }
                    rep
                }
                SolverChoice::Gusto(c) => {
                    let rep = gusto::run(v.ocp(), &guess, c, &sm, resolved.scheme).context(case.name())?;
                    if rep.outcome == Outcome::MaxIterations && !(c.eps == 0.0 && c.eps_r == 0.0) {
                        reasons.push(format!("no convergence in {} iterations", c.max_iters));
                    }
                    if rep.iterations.last().and_then(|r| r.state_violated) == Some(true) {
                        reasons.push("state constraints still penalized".into());
                    }
                    rep
                }
                SolverChoice::Lcvx => unreachable!("resolve rejects lcvx for vehicle cases"),
            };
            if rep.outcome == Outcome::PenaltyOverflow {
                reasons.push(format!("penalty weight overflow at {:.3e}", rep.final_lambda));
            }
            let summary = scp_summary(&v, &rep)?;
            let ver = propagate_and_verify(&v, &rep.trajectory, resolved.scheme)?;
            let outcome = rep.outcome.into();
            (rep.trajectory, summary, rep.total, rep.iterations, outcome, reasons, ver.dense, ver.checks)
        }
    };
    reasons.extend(checks.failures());
    let verdict = if reasons.is_empty() { Verdict::Feasible } else { Verdict::SoftFailure };
    let artifact = TrajectoryArtifact::new(&it, summary.final_time, names, dense);
    let report = RunReport {
        config: cfg.clone(),
        case,
        algorithm: cfg.algorithm(),
        outcome,
        verdict,
        reasons,
        iterations,
        checks,
        summary,
        timing,
    };
    Ok(RunOutput { report, artifact })
}
