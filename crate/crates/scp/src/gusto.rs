//! GuSTO: soft state and trust-region penalties, no virtual controls.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use trajopt_conic::{ConicProgram, LinExpr, ProgramBuilder, SolverSettings};
use trajopt_ocp::{
    discretize, running_cost, trapz, LinearizedSegmentSet, Matrix, Ocp, ScalingMap, Scheme, TrajectoryIterate, Vector,
};

use crate::common::{
    emit_terminal_cost, mat_exprs, ms_since, project_guess, solve_checked, terminal_cost, trapz_weights, Layout,
    LinearizedCost,
};
use crate::norm::Norm;
use crate::penalty::{h_penalty, PenaltyKind};
use crate::report::{Algorithm, IterationRecord, Outcome, ScpReport, Timing};
use crate::ScpError;

/// Tangent points `σ z₀` of the piecewise-linear softplus model.
const SOFTPLUS_TANGENTS: [f64; 13] = [-8.0, -4.0, -2.0, -1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GustoConfig {
    pub lambda0: f64,
    pub lambda_max: f64,
    pub gamma_fail: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub beta_sh: f64,
    pub beta_gr: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub eta_init: f64,
    /// exponential shrink rate
    pub mu: f64,
    /// first iteration with exponential shrink
    pub k_star: usize,
    pub penalty: PenaltyKind,
    pub q: Norm,
    pub q_hat: Norm,
    pub alpha_x: f64,
    pub alpha_p: f64,
    pub eps: f64,
    pub eps_r: f64,
    pub max_iters: usize,
    /// tolerance on constraint and trust-region violations
    pub violation_tol: f64,
    /// Impose the trust region as a constraint instead of a soft penalty.
    pub hard_trust_region: bool,
    pub solver: SolverSettings,
}

impl Default for GustoConfig {
    fn default() -> Self {
        Self {
            lambda0: 1e1,
            lambda_max: 1e7,
            gamma_fail: 5.0,
            rho0: 0.1,
            rho1: 0.5,
            beta_sh: 2.0,
            beta_gr: 2.0,
            eta0: 1e-3,
            eta1: 10.0,
            eta_init: 1.0,
            mu: 0.9,
            k_star: 8,
            penalty: PenaltyKind::QuadraticRectifier,
            q: Norm::Two,
            q_hat: Norm::Inf,
            alpha_x: 1.0,
            alpha_p: 1.0,
            eps: 1e-4,
            eps_r: 0.0,
            max_iters: 50,
            violation_tol: 1e-6,
            hard_trust_region: false,
            solver: SolverSettings::default(),
        }
    }
}

impl GustoConfig {
    pub fn validate(&self) -> Result<(), ScpError> {
        let bad = |m: &str| Err(ScpError::Config(m.into()));
        if !(1.0 <= self.lambda0 && self.lambda0 < self.lambda_max) {
            return bad("need 1 <= lambda0 < lambda_max");
        }
        if !(self.gamma_fail > 1.0 && self.beta_sh > 1.0 && self.beta_gr > 1.0) {
            return bad("gamma_fail, beta_sh and beta_gr must exceed 1");
        }
        if !(0.0 < self.rho0 && self.rho0 < self.rho1 && self.rho1 < 1.0) {
            return bad("need 0 < rho0 < rho1 < 1");
        }
        if !(0.0 < self.eta0 && self.eta0 <= self.eta_init && self.eta_init <= self.eta1) {
            return bad("need 0 < eta0 <= eta_init <= eta1");
        }
        if !(0.0 < self.mu && self.mu <= 1.0) || self.k_star < 1 {
            return bad("need 0 < mu <= 1 and k_star >= 1");
        }
        if !(self.alpha_x > 0.0 && self.alpha_p > 0.0) {
            return bad("alpha_x and alpha_p must be positive");
        }
        if let PenaltyKind::Softplus { sharpness } = self.penalty {
            if !(sharpness > 0.0) {
                return bad("softplus sharpness must be positive");
            }
        }
        if !(self.eps >= 0.0 && self.eps_r >= 0.0 && self.violation_tol >= 0.0) {
            return bad("tolerances must be nonnegative");
        }
        self.solver.validate()?;
        Ok(())
    }
}

/// `Σ h_λ(w_i)` over state constraints that involve `x`, plus `Σ h_λ(s_i)`.
pub fn soft_state_penalty(
    ocp: &dyn Ocp,
    k: usize,
    x: &Vector,
    u: &Vector,
    p: &Vector,
    lambda: f64,
    kind: PenaltyKind,
) -> f64 {
    let w: f64 = ocp
        .state_constraints(k)
        .iter()
        .filter(|c| c.involves_state())
        .map(|c| h_penalty(c.violation(x, u, p), lambda, kind).0)
        .sum();
    w + ocp.path(k, x, u, p).iter().map(|&s| h_penalty(s, lambda, kind).0).sum::<f64>()
}

/// `h_λ(α_x‖δx‖_q + α_p‖δp‖_q − η)` on scaled deviations.
#[allow(clippy::too_many_arguments)]
pub fn trust_region_penalty(
    dx: &[f64],
    dp: &[f64],
    eta: f64,
    lambda: f64,
    kind: PenaltyKind,
    q: Norm,
    alpha_x: f64,
    alpha_p: f64,
) -> f64 {
    h_penalty(alpha_x * q.eval(dx) + alpha_p * q.eval(dp) - eta, lambda, kind).0
}

/// Adds `weight · h_λ(z)` to the objective through an epigraph.
fn emit_h(b: &mut ProgramBuilder, z: LinExpr, lambda: f64, kind: PenaltyKind, weight: f64) {
    if weight == 0.0 {
        return;
    }
    match kind {
        PenaltyKind::QuadraticRectifier => {
            let a = b.var();
            b.nonneg(LinExpr::var(a));
            b.nonneg(LinExpr::var(a).plus_expr(&z, -1.0));
            // τ ≥ λa² keeps τ at the scale of the cost when λ is large
            let tau = LinExpr::var(b.var());
            b.square_epigraph(&tau, vec![LinExpr::term(a, lambda.sqrt())]);
            b.add_cost_expr(&tau, weight);
        }
        PenaltyKind::Hinge => {
            let a = b.var();
            b.nonneg(LinExpr::var(a));
            b.nonneg(LinExpr::var(a).plus_expr(&z, -1.0));
            b.add_cost(a, weight * lambda);
        }
        PenaltyKind::Softplus { sharpness } => {
            // outer polyhedral model: the maximum of tangents and zero
            let tau = b.var();
            b.nonneg(LinExpr::var(tau));
            for s in SOFTPLUS_TANGENTS {
                let z0 = s / sharpness;
                let (h0, d0) = h_penalty(z0, lambda, kind);
                b.nonneg(LinExpr::var(tau).plus_expr(&z, -d0).plus_constant(d0 * z0 - h0));
            }
            b.add_cost(tau, weight);
        }
    }
}

/// Reference-dependent data shared by every subproblem built about one
/// reference.
pub struct Model {
    pub segments: LinearizedSegmentSet,
    pub cost: LinearizedCost,
    /// `f(t_k, x̄_k, ū_k, p̄)` and `(A, B, F)` at each reference node
    pub f: Vec<Vector>,
    pub jac: Vec<(Matrix, Matrix, Matrix)>,
}

impl Model {
    pub fn new(ocp: &dyn Ocp, reference: &TrajectoryIterate, scheme: Scheme) -> Result<Self, ScpError> {
        let segments = discretize(ocp, reference, scheme)?;
        let cost = LinearizedCost::new(ocp, reference)?;
        let p = &reference.p;
        let mut f = Vec::with_capacity(reference.len());
        let mut jac = Vec::with_capacity(reference.len());
        for k in 0..reference.len() {
            let t = reference.grid.t(k);
            f.push(ocp.dynamics(t, &reference.x[k], &reference.u[k], p));
            jac.push(ocp.dynamics_jacobians(t, &reference.x[k], &reference.u[k], p));
        }
        Ok(Self { segments, cost, f, jac })
    }
}

pub struct Subproblem {
    pub program: ConicProgram,
    layout: Layout,
}

impl Subproblem {
    pub fn extract(&self, z: &[f64]) -> TrajectoryIterate {
        self.layout.extract(z)
    }
}

/// Builds the penalized convex subproblem about `reference`.
#[allow(clippy::too_many_arguments)]
pub fn build_subproblem(
    ocp: &dyn Ocp,
    reference: &TrajectoryIterate,
    model: &Model,
    lambda: f64,
    eta: f64,
    config: &GustoConfig,
    scaling: &ScalingMap,
) -> Result<Subproblem, ScpError> {
    let dims = ocp.dims();
    let nodes = reference.len();
    let weights = trapz_weights(&reference.grid);
    let kind = config.penalty;
    let mut b = ProgramBuilder::new();
    let l = Layout::new(&mut b, reference, scaling)?;

    for (k, seg) in model.segments.segments.iter().enumerate() {
        let ax = mat_exprs(&seg.a, &l.x[k]);
        let bm = mat_exprs(&seg.b_minus, &l.u[k]);
        let bp = mat_exprs(&seg.b_plus, &l.u[k + 1]);
        let fp = mat_exprs(&seg.f, &l.p);
        for i in 0..dims.n {
            let row = l.x[k + 1][i]
                .clone()
                .plus_expr(&ax[i], -1.0)
                .plus_expr(&bm[i], -1.0)
                .plus_expr(&bp[i], -1.0)
                .plus_expr(&fp[i], -1.0)
                .plus_constant(-seg.r[i])
                .scaled(1.0 / scaling.sx[i]);
            b.zero(row);
        }
    }

    let np = config.q.emit(&mut b, l.dp_hat());
    for k in 0..nodes {
        let map = l.map(k);
        for c in ocp.input_constraints(k) {
            c.emit(&mut b, &map);
        }
        for c in ocp.state_constraints(k) {
            if c.involves_state() {
                let w = c.emit_epigraph(&mut b, &map);
                emit_h(&mut b, LinExpr::var(w), lambda, kind, weights[k]);
            } else {
                c.emit(&mut b, &map);
            }
        }
        let node = &model.segments.nodes[k];
        let cx = mat_exprs(&node.c, &l.x[k]);
        let du = mat_exprs(&node.d, &l.u[k]);
        let gp = mat_exprs(&node.g, &l.p);
        for i in 0..dims.n_s {
            let s = cx[i].clone().plus_expr(&du[i], 1.0).plus_expr(&gp[i], 1.0).plus_constant(node.r_prime[i]);
            emit_h(&mut b, s, lambda, kind, weights[k]);
        }
        let mut tr = LinExpr::constant(-eta);
        tr.add_expr(&config.q.emit(&mut b, l.dx_hat(k)), config.alpha_x);
        tr.add_expr(&np, config.alpha_p);
        if config.hard_trust_region {
            b.nonneg(tr.scaled(-1.0));
        } else {
            emit_h(&mut b, tr, lambda, kind, weights[k]);
        }
    }

    for (bd, x) in [(&model.segments.initial, &l.x[0]), (&model.segments.terminal, &l.x[nodes - 1])] {
        let hx = mat_exprs(&bd.h, x);
        let kp = mat_exprs(&bd.k, &l.p);
        for i in 0..bd.l.len() {
            b.zero(hx[i].clone().plus_expr(&kp[i], 1.0).plus_constant(bd.l[i]));
        }
    }

    emit_terminal_cost(ocp, &mut b, &l);
    model.cost.emit(&mut b, &l, &weights);
    Ok(Subproblem { program: b.build()?, layout: l })
}

fn trust_terms(
    reference: &TrajectoryIterate,
    it: &TrajectoryIterate,
    scaling: &ScalingMap,
    config: &GustoConfig,
) -> (Vec<f64>, Vec<f64>) {
    let dp = scaling.scale_p(&it.p) - scaling.scale_p(&reference.p);
    let np = config.q.eval(dp.as_slice());
    let z = (0..it.len())
        .map(|k| {
            let dx = scaling.scale_x(&it.x[k]) - scaling.scale_x(&reference.x[k]);
            config.alpha_x * config.q.eval(dx.as_slice()) + config.alpha_p * np
        })
        .collect();
    (z, vec![np])
}

/// `L_λ` at `it`, with `s` linearized about the model's reference.
#[allow(clippy::too_many_arguments)]
pub fn linear_cost(
    ocp: &dyn Ocp,
    it: &TrajectoryIterate,
    reference: &TrajectoryIterate,
    model: &Model,
    lambda: f64,
    eta: f64,
    config: &GustoConfig,
    scaling: &ScalingMap,
) -> Result<f64, ScpError> {
    let kind = config.penalty;
    let (tr, _) = trust_terms(reference, it, scaling, config);
    let p = &it.p;
    let integrand: Vec<f64> = (0..it.len())
        .map(|k| {
            let (x, u) = (&it.x[k], &it.u[k]);
            let node = &model.segments.nodes[k];
            let s_lin = &node.c * x + &node.d * u + &node.g * p + &node.r_prime;
            let w: f64 = ocp
                .state_constraints(k)
                .iter()
                .filter(|c| c.involves_state())
                .map(|c| h_penalty(c.violation(x, u, p), lambda, kind).0)
                .sum();
            model.cost.eval(k, x, u, p)
                + w
                + s_lin.iter().map(|&s| h_penalty(s, lambda, kind).0).sum::<f64>()
                + h_penalty(tr[k] - eta, lambda, kind).0
        })
        .collect();
    Ok(terminal_cost(ocp, it) + trapz(&integrand, it.grid.dt())?)
}

/// `J_λ` at `it`; the trust-region term is measured from `reference`.
#[allow(clippy::too_many_arguments)]
pub fn nonlinear_cost(
    ocp: &dyn Ocp,
    it: &TrajectoryIterate,
    reference: &TrajectoryIterate,
    lambda: f64,
    eta: f64,
    config: &GustoConfig,
    scaling: &ScalingMap,
) -> Result<f64, ScpError> {
    let kind = config.penalty;
    let (tr, _) = trust_terms(reference, it, scaling, config);
    let p = &it.p;
    let integrand: Vec<f64> = (0..it.len())
        .map(|k| {
            let (x, u) = (&it.x[k], &it.u[k]);
            running_cost(ocp, x, u, p)
                + soft_state_penalty(ocp, k, x, u, p, lambda, kind)
                + h_penalty(tr[k] - eta, lambda, kind).0
        })
        .collect();
    Ok(terminal_cost(ocp, it) + trapz(&integrand, it.grid.dt())?)
}

/// `ρ = (|J* − L*| + Θ*) / (|L*| + trapz ‖ẋ*_k‖₂)` with `ẋ*` from the
/// dynamics linearized at the reference nodes.
pub fn accuracy_ratio(
    ocp: &dyn Ocp,
    solution: &TrajectoryIterate,
    reference: &TrajectoryIterate,
    model: &Model,
    j_star: f64,
    l_star: f64,
) -> Result<f64, ScpError> {
    let mut theta = Vec::with_capacity(solution.len());
    let mut speed = Vec::with_capacity(solution.len());
    let dp = &solution.p - &reference.p;
    for k in 0..solution.len() {
        let (a, b, f) = &model.jac[k];
        let xdot = &model.f[k] + a * (&solution.x[k] - &reference.x[k]) + b * (&solution.u[k] - &reference.u[k]) + f * &dp;
        let actual = ocp.dynamics(solution.grid.t(k), &solution.x[k], &solution.u[k], &solution.p);
        theta.push((actual - &xdot).norm());
        speed.push(xdot.norm());
    }
    let dt = solution.grid.dt();
    let den = l_star.abs() + trapz(&speed, dt)?;
    if !(den > 0.0) {
        return Err(ScpError::Inconsistent("trivial subproblem solution has no accuracy ratio".into()));
    }
    Ok(((j_star - l_star).abs() + trapz(&theta, dt)?) / den)
}

/// Returns `(accept, λ′, η′)`.
pub fn update(
    rho: f64,
    trust_violated: bool,
    state_violated: bool,
    lambda: f64,
    eta: f64,
    iter: usize,
    c: &GustoConfig,
) -> (bool, f64, f64) {
    let (accept, lambda_next, eta_next) = if trust_violated {
        (false, c.gamma_fail * lambda, eta)
    } else if rho > c.rho1 {
        (false, lambda, (eta / c.beta_sh).max(c.eta0))
    } else {
        let eta_next = if rho < c.rho0 { (eta * c.beta_gr).min(c.eta1) } else { eta };
        let lambda_next = if state_violated { c.gamma_fail * lambda } else { (lambda / c.gamma_fail).max(c.lambda0) };
        (true, lambda_next, eta_next)
    };
    let exponent = (1 + iter).saturating_sub(c.k_star);
    (accept, lambda_next, c.mu.powi(exponent as i32) * eta_next)
}

/// Small change of `(u, p)` or of the nonlinear cost.
pub fn stopping(
    reference: &TrajectoryIterate,
    solution: &TrajectoryIterate,
    scaling: &ScalingMap,
    j_ref: f64,
    j_star: f64,
    c: &GustoConfig,
) -> Result<bool, ScpError> {
    let dp = c.q_hat.eval((scaling.scale_p(&solution.p) - scaling.scale_p(&reference.p)).as_slice());
    let du: Vec<f64> = reference
        .u
        .iter()
        .zip(&solution.u)
        .map(|(a, b)| c.q_hat.eval((scaling.scale_u(b) - scaling.scale_u(a)).as_slice()))
        .collect();
    let step = dp + trapz(&du, solution.grid.dt())?;
    Ok((c.eps > 0.0 && step <= c.eps) || (c.eps_r > 0.0 && (j_ref - j_star).abs() <= c.eps_r * j_ref.abs()))
}

fn max_state_violation(ocp: &dyn Ocp, it: &TrajectoryIterate) -> f64 {
    let p = &it.p;
    (0..it.len())
        .map(|k| {
            let (x, u) = (&it.x[k], &it.u[k]);
            let w = ocp
                .state_constraints(k)
                .iter()
                .filter(|c| c.involves_state())
                .map(|c| c.violation(x, u, p))
                .fold(f64::NEG_INFINITY, f64::max);
            ocp.path(k, x, u, p).iter().copied().fold(w, f64::max)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Checks that `f = f₀ + Σ uᵢ fᵢ` reproduces the dynamics at every node.
pub fn check_control_affine(ocp: &dyn Ocp, it: &TrajectoryIterate) -> Result<(), ScpError> {
    for k in 0..it.len() {
        let t = it.grid.t(k);
        let (f0, fu) = ocp
            .control_affine(t, &it.x[k], &it.p)
            .ok_or_else(|| ScpError::Formulation("dynamics have no control-affine form".into()))?;
        let f = ocp.dynamics(t, &it.x[k], &it.u[k], &it.p);
        let err = (f0 + fu * &it.u[k] - &f).amax();
        if err > 1e-10 * f.amax().max(1.0) {
            return Err(ScpError::Formulation(format!("control-affine form is off by {err:.3e} at node {k}")));
        }
    }
    Ok(())
}

/// Runs GuSTO from `guess` (projected onto the convex path constraints first).
pub fn run(
    ocp: &dyn Ocp,
    guess: &TrajectoryIterate,
    config: &GustoConfig,
    scaling: &ScalingMap,
    scheme: Scheme,
) -> Result<ScpReport, ScpError> {
    config.validate()?;
    let mut reference = project_guess(ocp, guess, scaling)?;
    check_control_affine(ocp, &reference)?;
    let mut lambda = config.lambda0;
    let mut eta = config.eta_init;
    let mut records = Vec::new();
    let mut total = Timing::default();
    let mut outcome = Outcome::MaxIterations;
    let mut model: Option<Model> = None;

    for iter in 0..config.max_iters {
        let mut timing = Timing::default();
        if model.is_none() {
            let t = Instant::now();
            model = Some(Model::new(ocp, &reference, scheme)?);
            timing.discretize_ms = ms_since(t);
        }
        let m = model.as_ref().expect("model built above");

        let t = Instant::now();
        let sub = build_subproblem(ocp, &reference, m, lambda, eta, config, scaling)?;
        timing.formulate_ms = ms_since(t);

        let t = Instant::now();
        let (sol, stats) = solve_checked(&sub.program, &config.solver, iter)?;
        timing.solve_ms = ms_since(t);

        let candidate = sub.extract(&sol.primal);
        let l_star = linear_cost(ocp, &candidate, &reference, m, lambda, eta, config, scaling)?;
        let j_star = nonlinear_cost(ocp, &candidate, &reference, lambda, eta, config, scaling)?;
        let j_ref = nonlinear_cost(ocp, &reference, &reference, lambda, eta, config, scaling)?;
        let rho = accuracy_ratio(ocp, &candidate, &reference, m, j_star, l_star)?;
        let (tr, _) = trust_terms(&reference, &candidate, scaling, config);
        let trust_violated = tr.iter().any(|z| z - eta > config.violation_tol);
        let state_violated = max_state_violation(ocp, &candidate) > config.violation_tol;

        let (accepted, lambda_next, eta_next) = update(rho, trust_violated, state_violated, lambda, eta, iter, config);
        let converged = accepted && stopping(&reference, &candidate, scaling, j_ref, j_star, config)?;
        log::info!(
            "gusto {iter:>3}: L*={l_star:.6e} J*={j_star:.6e} Jref={j_ref:.6e} rho={rho:.4} eta={eta:.3e} \
             lambda={lambda:.1e} acc={accepted} tr={trust_violated} st={state_violated}"
        );
        records.push(IterationRecord {
            iter,
            cost_linear: l_star,
            cost_reference: j_ref,
            cost_nonlinear: j_star,
            rho: Some(rho),
            eta,
            eta_next,
            lambda,
            lambda_next,
            accepted,
            converged,
            virtual_norm: None,
            trust_violated: Some(trust_violated),
            state_violated: Some(state_violated),
            solver: stats,
            timing,
        });
        total.formulate_ms += timing.formulate_ms;
        total.discretize_ms += timing.discretize_ms;
        total.solve_ms += timing.solve_ms;
        lambda = lambda_next;
        eta = eta_next;
        if accepted {
            reference = candidate;
            model = None;
        }
        if converged {
            outcome = Outcome::Converged;
            break;
        }
        if lambda > config.lambda_max {
            outcome = Outcome::PenaltyOverflow;
            break;
        }
    }

    Ok(ScpReport {
        algorithm: Algorithm::Gusto,
        outcome,
        iterations: records,
        trajectory: reference,
        final_lambda: lambda,
        final_eta: eta,
        virtual_norm: None,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_cases() {
        let c = GustoConfig { k_star: 5, ..Default::default() };
        let (acc, lam, eta) = update(0.0, true, false, 10.0, 1.0, 0, &c);
        assert!(!acc && lam == 50.0 && eta == 1.0);
        let (acc, lam, eta) = update(0.9, false, false, 10.0, 1.0, 0, &c);
        assert!(!acc && lam == 10.0 && eta == 0.5);
        let (acc, lam, eta) = update(0.05, false, false, 50.0, 1.0, 0, &c);
        assert!(acc && lam == 10.0 && eta == 2.0);
        let (acc, lam, eta) = update(0.3, false, true, 10.0, 1.0, 3, &c);
        assert!(acc && lam == 50.0 && eta == 1.0);
        // first exponential shrink at iter = k★ − 1 + 1
        let (_, _, eta) = update(0.3, false, false, 10.0, 1.0, 5, &c);
        assert!((eta - 0.9).abs() < 1e-15);
    }

    #[test]
    fn penalty_examples() {
        let r = PenaltyKind::QuadraticRectifier;
        assert_eq!(trust_region_penalty(&[0.0], &[0.0], 1.0, 5.0, r, Norm::Two, 1.0, 1.0), 0.0);
        assert_eq!(trust_region_penalty(&[2.0], &[], 1.0, 1.0, r, Norm::Two, 1.0, 1.0), 1.0);
        let wide = trust_region_penalty(&[2.0], &[], 1.5, 1.0, r, Norm::Two, 1.0, 1.0);
        assert!(wide <= 1.0);
    }

    #[test]
    fn softplus_model_is_an_outer_approximation() {
        let kind = PenaltyKind::Softplus { sharpness: 10.0 };
        for i in -50..=50 {
            let z = i as f64 * 0.02;
            let model = SOFTPLUS_TANGENTS
                .iter()
                .map(|s| {
                    let z0 = s / 10.0;
                    let (h0, d0) = h_penalty(z0, 3.0, kind);
                    h0 + d0 * (z - z0)
                })
                .fold(0.0, f64::max);
            let exact = h_penalty(z, 3.0, kind).0;
            assert!(model <= exact + 1e-12 && exact - model < 0.02 * 3.0);
        }
    }
}
