use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use serde::{Deserialize, Serialize};

use crate::kkt::{kkt_residuals, Residuals};
use crate::program::{Cone, ConicProgram};
use crate::ConicError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIters,
    NumericalError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iters: u32,
    pub scaling_enabled: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { eps_abs: 1e-8, eps_rel: 1e-8, max_iters: 100_000, scaling_enabled: true }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), ConicError> {
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0) || self.max_iters == 0 {
            return Err(ConicError::Settings(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicSolution {
    pub status: Status,
    pub primal: Vec<f64>,
    /// Multipliers `y ∈ K*` with `objective = Aᵀy` at optimality. For an
    /// infeasible status this is the certificate (`Aᵀy = 0`, `cᵀy < 0`).
    pub dual: Vec<f64>,
    /// `s = A x + c`, as reported by the solver.
    pub slack: Vec<f64>,
    pub objective_value: f64,
    pub residuals: Residuals,
    pub iterations: u32,
    /// The solver stopped at its relaxed tolerances.
    pub reduced_accuracy: bool,
    pub solve_seconds: f64,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

fn empty_solution(program: &ConicProgram, status: Status) -> ConicSolution {
    ConicSolution {
        status,
        primal: vec![0.0; program.num_vars],
        dual: vec![0.0; program.num_rows()],
        slack: vec![0.0; program.num_rows()],
        objective_value: f64::NAN,
        residuals: Residuals { primal: f64::NAN, dual: f64::NAN, gap: f64::NAN },
        iterations: 0,
        reduced_accuracy: false,
        solve_seconds: 0.0,
    }
}

/// Solves a conic program. Malformed programs are errors; non-finite data and
/// solver trouble are reported through [`Status`].
pub fn solve(program: &ConicProgram, settings: &SolverSettings) -> Result<ConicSolution, ConicError> {
    program.validate()?;
    settings.validate()?;
    let finite = program.objective.iter().all(|v| v.is_finite())
        && program.constraint_offset.iter().all(|v| v.is_finite())
        && program.constraint_matrix.entries.iter().all(|e| e.2.is_finite())
        && program.objective_constant.is_finite();
    if !finite {
        return Ok(empty_solution(program, Status::NumericalError));
    }

    let n = program.num_vars;
    let m = program.num_rows();
    let p = CscMatrix::new(n, n, vec![0; n + 1], vec![], vec![]);
    let mut neg = program.constraint_matrix.clone();
    for e in &mut neg.entries {
        e.2 = -e.2;
    }
    let (colptr, rowval, nzval) = neg.to_csc();
    let a = CscMatrix::new(m, n, colptr, rowval, nzval);
    let cones: Vec<SupportedConeT<f64>> = program
        .cones
        .blocks
        .iter()
        .map(|c| match *c {
            Cone::Zero(d) => SupportedConeT::ZeroConeT(d),
            Cone::Nonnegative(d) => SupportedConeT::NonnegativeConeT(d),
            Cone::SecondOrder(d) => SupportedConeT::SecondOrderConeT(d),
        })
        .collect();
    // The backend measures its residuals on equilibrated data; a tenfold margin
    // keeps the unscaled residuals from `kkt_residuals` inside the requested bounds.
    let cl_settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(settings.max_iters)
        .tol_gap_abs(0.1 * settings.eps_abs)
        .tol_gap_rel(0.1 * settings.eps_rel)
        .tol_feas(0.1 * settings.eps_abs)
        .tol_infeas_abs(0.1 * settings.eps_abs)
        .tol_infeas_rel(0.1 * settings.eps_rel)
        .equilibrate_enable(settings.scaling_enabled)
        .presolve_enable(false)
        .build()
        .map_err(|e| ConicError::Settings(e.to_string()))?;

    let start = Instant::now();
    let mut solver = DefaultSolver::new(&p, &program.objective, &a, &program.constraint_offset, &cones, cl_settings)
        .map_err(|e| ConicError::Settings(e.to_string()))?;
    solver.solve();
    let seconds = start.elapsed().as_secs_f64();
    let sol = &solver.solution;
    log::debug!(
        "backend {:?} after {} iterations (gap {:.2e}, primal {:.2e}, dual {:.2e})",
        sol.status,
        sol.iterations,
        solver.info.gap_rel,
        solver.info.res_primal,
        solver.info.res_dual
    );

    let (status, reduced) = match sol.status {
        SolverStatus::Solved => (Status::Optimal, false),
        SolverStatus::AlmostSolved => (Status::Optimal, true),
        SolverStatus::PrimalInfeasible => (Status::Infeasible, false),
        SolverStatus::AlmostPrimalInfeasible => (Status::Infeasible, true),
        SolverStatus::DualInfeasible => (Status::Unbounded, false),
        SolverStatus::AlmostDualInfeasible => (Status::Unbounded, true),
        SolverStatus::MaxIterations | SolverStatus::MaxTime => (Status::MaxIters, false),
        _ => (Status::NumericalError, false),
    };
    let primal = sol.x.clone();
    let dual = sol.z.clone();
    let residuals = kkt_residuals(program, &primal, &dual);
    Ok(ConicSolution {
        status,
        objective_value: program.objective_value(&primal),
        primal,
        dual,
        slack: sol.s.clone(),
        residuals,
        iterations: sol.iterations,
        reduced_accuracy: reduced,
        solve_seconds: seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{LinExpr, ProgramBuilder};

    fn x_ge_one() -> ConicProgram {
        let mut b = ProgramBuilder::new();
        let x = b.var();
        b.add_cost(x, 1.0);
        b.nonneg(LinExpr::var(x).plus_constant(-1.0));
        b.build().unwrap()
    }

    #[test]
    fn lp_bound() {
        let s = solve(&x_ge_one(), &SolverSettings::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.primal[0] - 1.0).abs() < 1e-8);
        assert!((s.objective_value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn pythagorean_cone() {
        let mut b = ProgramBuilder::new();
        let t = b.var();
        b.add_cost(t, 1.0);
        b.soc(LinExpr::var(t), vec![LinExpr::constant(3.0), LinExpr::constant(4.0)]);
        let s = solve(&b.build().unwrap(), &SolverSettings::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.primal[0] - 5.0).abs() < 1e-7);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut b = ProgramBuilder::new();
        let x = b.var();
        b.nonneg(LinExpr::var(x).plus_constant(-1.0));
        b.nonneg(LinExpr::term(x, -1.0));
        let prog = b.build().unwrap();
        let s = solve(&prog, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, Status::Infeasible);
        assert!(crate::certificate_residual(&prog, &s).unwrap() < 1e-8);
    }

    #[test]
    fn unbounded_ray() {
        let mut b = ProgramBuilder::new();
        let x = b.var();
        b.add_cost(x, -1.0);
        b.nonneg(LinExpr::var(x));
        let prog = b.build().unwrap();
        let s = solve(&prog, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, Status::Unbounded);
        assert!(crate::certificate_residual(&prog, &s).unwrap() < 1e-8);
    }

    #[test]
    fn nan_data_is_numerical_error() {
        let mut prog = x_ge_one();
        prog.constraint_offset[0] = f64::NAN;
        let s = solve(&prog, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, Status::NumericalError);
    }

    #[test]
    fn repeat_solves_are_identical() {
        let prog = x_ge_one();
        let a = solve(&prog, &SolverSettings::default()).unwrap();
        let b = solve(&prog, &SolverSettings::default()).unwrap();
        assert_eq!(a.primal, b.primal);
        assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
    }

    #[test]
    fn bad_settings_rejected() {
        let s = SolverSettings { eps_abs: 0.0, ..Default::default() };
        assert!(solve(&x_ge_one(), &s).is_err());
    }
}
