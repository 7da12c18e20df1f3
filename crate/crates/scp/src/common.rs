use std::time::Instant;

use nalgebra::SymmetricEigen;
use trajopt_conic::{solve, ConicSolution, LinExpr, ProgramBuilder, SolverSettings, Status};
use trajopt_ocp::{Matrix, Ocp, ScalingMap, TimeGrid, TrajectoryIterate, Var, Vector};

use crate::report::SolveStats;
use crate::ScpError;

pub(crate) const PSD_TOL: f64 = 1e-10;

/// Trapezoid quadrature weights on a uniform grid.
pub fn trapz_weights(grid: &TimeGrid) -> Vec<f64> {
    let dt = grid.dt();
    (0..grid.len())
        .map(|k| if k == 0 || k + 1 == grid.len() { dt / 2.0 } else { dt })
        .collect()
}

pub(crate) fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Scaled node variables of a subproblem and their unscaled expressions.
pub(crate) struct Layout {
    pub xh: Vec<Vec<usize>>,
    pub uh: Vec<Vec<usize>>,
    pub ph: Vec<usize>,
    pub x: Vec<Vec<LinExpr>>,
    pub u: Vec<Vec<LinExpr>>,
    pub p: Vec<LinExpr>,
    pub scaling: ScalingMap,
    pub reference_hat: TrajectoryIterate,
}

fn unscaled(vars: &[usize], s: &Vector, c: &Vector) -> Vec<LinExpr> {
    vars.iter().enumerate().map(|(i, &v)| LinExpr::term(v, s[i]).plus_constant(c[i])).collect()
}

impl Layout {
    pub fn new(b: &mut ProgramBuilder, reference: &TrajectoryIterate, scaling: &ScalingMap) -> Result<Self, ScpError> {
        let (n, m, d) = (scaling.sx.len(), scaling.su.len(), scaling.sp.len());
        let nodes = reference.len();
        let xh: Vec<Vec<usize>> = (0..nodes).map(|k| b.named_vars(n, &format!("x{k}"))).collect();
        let uh: Vec<Vec<usize>> = (0..nodes).map(|k| b.named_vars(m, &format!("u{k}"))).collect();
        let ph = b.named_vars(d, "p");
        let x = xh.iter().map(|v| unscaled(v, &scaling.sx, &scaling.cx)).collect();
        let u = uh.iter().map(|v| unscaled(v, &scaling.su, &scaling.cu)).collect();
        let p = unscaled(&ph, &scaling.sp, &scaling.cp);
        Ok(Self { xh, uh, ph, x, u, p, scaling: scaling.clone(), reference_hat: scaling.scale(reference)? })
    }

    pub fn map(&self, k: usize) -> impl Fn(Var) -> LinExpr + '_ {
        move |v| match v {
            Var::X(i) => self.x[k][i].clone(),
            Var::U(i) => self.u[k][i].clone(),
            Var::P(i) => self.p[i].clone(),
        }
    }

    fn deviation(vars: &[usize], reference: &Vector) -> Vec<LinExpr> {
        vars.iter().zip(reference.iter()).map(|(&v, &r)| LinExpr::var(v).plus_constant(-r)).collect()
    }

    pub fn dx_hat(&self, k: usize) -> Vec<LinExpr> {
        Self::deviation(&self.xh[k], &self.reference_hat.x[k])
    }

    pub fn du_hat(&self, k: usize) -> Vec<LinExpr> {
        Self::deviation(&self.uh[k], &self.reference_hat.u[k])
    }

    pub fn dp_hat(&self) -> Vec<LinExpr> {
        Self::deviation(&self.ph, &self.reference_hat.p)
    }

    /// Unscaled iterate read from a primal solution vector.
    pub fn extract(&self, z: &[f64]) -> TrajectoryIterate {
        let read = |vars: &[usize]| Vector::from_iterator(vars.len(), vars.iter().map(|&v| z[v]));
        let s = &self.scaling;
        TrajectoryIterate {
            grid: self.reference_hat.grid,
            x: self.xh.iter().map(|v| s.unscale_x(&read(v))).collect(),
            u: self.uh.iter().map(|v| s.unscale_u(&read(v))).collect(),
            p: s.unscale_p(&read(&self.ph)),
            virtuals: None,
        }
    }
}

/// Rows of `M · e` for a dense matrix and a vector of expressions, skipping
/// structural zeros.
pub(crate) fn mat_exprs(m: &Matrix, es: &[LinExpr]) -> Vec<LinExpr> {
    (0..m.nrows())
        .map(|i| {
            let mut row = LinExpr::zero();
            for (j, e) in es.iter().enumerate() {
                let c = m[(i, j)];
                if c != 0.0 {
                    row.add_expr(e, c);
                }
            }
            row
        })
        .collect()
}

pub(crate) fn dot_exprs(v: &Vector, es: &[LinExpr]) -> LinExpr {
    let mut out = LinExpr::zero();
    for (c, e) in v.iter().zip(es) {
        if *c != 0.0 {
            out.add_expr(e, *c);
        }
    }
    out
}

/// Running cost linearized about a reference:
/// `Γ̃_k = uᵀSu + ℓ̄_kᵀu + ḡ_k + a_kᵀ(x − x̄_k) + c_kᵀ(p − p̄)`, where
/// `a_k`, `c_k` collect the first-order terms of `ℓ(x, p)ᵀu + g(x, p)`.
#[derive(Debug, Clone)]
pub struct LinearizedCost {
    pub s: Matrix,
    /// rows `R` with `S = RᵀR`
    factor: Matrix,
    pub l: Vec<Vector>,
    pub g: Vec<f64>,
    pub ax: Vec<Vector>,
    pub ap: Vec<Vector>,
    pub reference: TrajectoryIterate,
}

impl LinearizedCost {
    pub fn new(ocp: &dyn Ocp, reference: &TrajectoryIterate) -> Result<Self, ScpError> {
        let s = ocp.cost_weight();
        let factor = psd_factor(&s)?;
        let p = &reference.p;
        let mut out = Self {
            s,
            factor,
            l: Vec::new(),
            g: Vec::new(),
            ax: Vec::new(),
            ap: Vec::new(),
            reference: reference.clone(),
        };
        for (x, u) in reference.x.iter().zip(&reference.u) {
            let (lx, lp) = ocp.cost_linear_jacobians(x, p);
            let (gx, gp) = ocp.cost_offset_gradients(x, p);
            out.l.push(ocp.cost_linear(x, p));
            out.g.push(ocp.cost_offset(x, p));
            out.ax.push(lx.transpose() * u + gx);
            out.ap.push(lp.transpose() * u + gp);
        }
        Ok(out)
    }

    pub fn eval(&self, k: usize, x: &Vector, u: &Vector, p: &Vector) -> f64 {
        let r = &self.reference;
        (u.transpose() * &self.s * u)[0]
            + self.l[k].dot(u)
            + self.g[k]
            + self.ax[k].dot(&(x - &r.x[k]))
            + self.ap[k].dot(&(p - &r.p))
    }

    /// Adds `Σ_k w_k Γ̃_k` to the objective.
    pub(crate) fn emit(&self, b: &mut ProgramBuilder, layout: &Layout, weights: &[f64]) {
        let r = &self.reference;
        for (k, &w) in weights.iter().enumerate() {
            if self.factor.nrows() > 0 {
                let t = LinExpr::var(b.var());
                b.square_epigraph(&t, mat_exprs(&self.factor, &layout.u[k]));
                b.add_cost_expr(&t, w);
            }
            let mut lin = dot_exprs(&self.l[k], &layout.u[k]);
            lin.add_expr(&dot_exprs(&self.ax[k], &layout.x[k]), 1.0);
            lin.add_expr(&dot_exprs(&self.ap[k], &layout.p), 1.0);
            lin.add_constant(self.g[k] - self.ax[k].dot(&r.x[k]) - self.ap[k].dot(&r.p));
            b.add_cost_expr(&lin, w);
        }
    }
}

/// `R` with `S = RᵀR`, dropping null directions. Fails when `S` has an
/// eigenvalue below `−PSD_TOL`.
pub(crate) fn psd_factor(s: &Matrix) -> Result<Matrix, ScpError> {
    if s.is_empty() || s.iter().all(|v| *v == 0.0) {
        return Ok(Matrix::zeros(0, s.ncols()));
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut rows = Vec::new();
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < -PSD_TOL * scale {
            return Err(ScpError::Formulation(format!("cost weight S has eigenvalue {lam}")));
        }
        if lam > PSD_TOL * scale {
            rows.push(eig.eigenvectors.column(i).transpose() * lam.sqrt());
        }
    }
    Ok(Matrix::from_rows(&rows))
}

/// `φ(x_N, p)`
pub(crate) fn terminal_cost(ocp: &dyn Ocp, it: &TrajectoryIterate) -> f64 {
    let (cx, cp) = ocp.terminal_cost();
    cx.dot(it.x.last().expect("grid has nodes")) + cp.dot(&it.p)
}

pub(crate) fn emit_terminal_cost(ocp: &dyn Ocp, b: &mut ProgramBuilder, layout: &Layout) {
    let (cx, cp) = ocp.terminal_cost();
    let mut e = dot_exprs(&cx, layout.x.last().expect("grid has nodes"));
    e.add_expr(&dot_exprs(&cp, &layout.p), 1.0);
    b.add_cost_expr(&e, 1.0);
}

pub(crate) fn solve_checked(
    program: &trajopt_conic::ConicProgram,
    settings: &SolverSettings,
    iter: usize,
) -> Result<(ConicSolution, SolveStats), ScpError> {
    let sol = solve(program, settings)?;
    let stats = SolveStats {
        status: sol.status,
        iterations: sol.iterations,
        reduced_accuracy: sol.reduced_accuracy,
        kkt_residual: sol.residuals.max(),
        num_vars: program.num_vars,
        num_rows: program.num_rows(),
    };
    if sol.status != Status::Optimal {
        return Err(ScpError::Subproblem { iter, status: sol.status });
    }
    if sol.reduced_accuracy {
        log::warn!("iteration {iter}: subproblem solved to reduced accuracy (kkt {:.2e})", stats.kkt_residual);
    }
    Ok((sol, stats))
}

/// Largest violation of the convex sets `X` and `U` over all nodes.
pub(crate) fn convex_violation(ocp: &dyn Ocp, it: &TrajectoryIterate) -> f64 {
    (0..it.len())
        .flat_map(|k| {
            let (x, u, p) = (&it.x[k], &it.u[k], &it.p);
            ocp.state_constraints(k)
                .into_iter()
                .chain(ocp.input_constraints(k))
                .map(move |c| c.violation(x, u, p))
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

/// Moves a guess onto `X` and `U` at every node by the smallest scaled
/// change, leaving it untouched when it already satisfies them.
pub fn project_guess(ocp: &dyn Ocp, guess: &TrajectoryIterate, scaling: &ScalingMap) -> Result<TrajectoryIterate, ScpError> {
    let worst = convex_violation(ocp, guess);
    if worst <= 1e-9 {
        return Ok(guess.clone());
    }
    log::info!("projecting guess onto the convex path constraints (violation {worst:.3e})");
    let mut b = ProgramBuilder::new();
    let layout = Layout::new(&mut b, guess, scaling)?;
    for k in 0..guess.len() {
        for c in ocp.state_constraints(k).into_iter().chain(ocp.input_constraints(k)) {
            c.emit(&mut b, &layout.map(k));
        }
        let mut dev = layout.dx_hat(k);
        dev.extend(layout.du_hat(k));
        let t = LinExpr::var(b.var());
        b.square_epigraph(&t, dev);
        b.add_cost_expr(&t, 1.0);
    }
    let t = LinExpr::var(b.var());
    b.square_epigraph(&t, layout.dp_hat());
    b.add_cost_expr(&t, 1.0);
    let program = b.build()?;
    let sol = solve(&program, &SolverSettings::default())?;
    if sol.status != Status::Optimal {
        return Err(ScpError::Formulation(format!("convex path constraints are empty ({:?})", sol.status)));
    }
    let mut out = layout.extract(&sol.primal);
    out.virtuals = None;
    Ok(out)
}
