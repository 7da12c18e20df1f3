//! SCvx: virtual-control relaxed subproblems with a hard trust region.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use trajopt_conic::{ConicProgram, LinExpr, ProgramBuilder, SolverSettings};
use trajopt_ocp::{
    defects, discretize, trapz, LinearizedSegmentSet, Ocp, PropagationResult, ScalingMap, Scheme, TrajectoryIterate,
    Vector, Virtuals,
};

use crate::common::{
    emit_terminal_cost, mat_exprs, ms_since, project_guess, solve_checked, terminal_cost, trapz_weights, Layout,
    LinearizedCost,
};
use crate::norm::Norm;
use crate::penalty::penalty;
use crate::report::{Algorithm, IterationRecord, Outcome, ScpReport, Timing};
use crate::ScpError;

/// Below this the predicted decrease is treated as zero.
pub const DENOMINATOR_GUARD: f64 = 1e-12;
/// Allowed negative predicted decrease relative to `max(1, |J̄|)`, from
/// solver tolerance.
pub const DENOMINATOR_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScvxConfig {
    pub lambda: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub beta_sh: f64,
    pub beta_gr: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub eta_init: f64,
    /// trust-region norm
    pub q: Norm,
    /// stopping norm
    pub q_hat: Norm,
    pub alpha_x: f64,
    pub alpha_u: f64,
    pub alpha_p: f64,
    pub eps: f64,
    pub eps_r: f64,
    pub max_iters: usize,
    pub solver: SolverSettings,
}

impl Default for ScvxConfig {
    fn default() -> Self {
        Self {
            lambda: 1e3,
            rho0: 0.01,
            rho1: 0.1,
            rho2: 0.7,
            beta_sh: 2.0,
            beta_gr: 2.0,
            eta0: 1e-3,
            eta1: 10.0,
            eta_init: 1.0,
            q: Norm::Two,
            q_hat: Norm::Inf,
            alpha_x: 1.0,
            alpha_u: 1.0,
            alpha_p: 1.0,
            eps: 1e-4,
            eps_r: 0.0,
            max_iters: 50,
            solver: SolverSettings::default(),
        }
    }
}

impl ScvxConfig {
    pub fn validate(&self) -> Result<(), ScpError> {
        let bad = |m: &str| Err(ScpError::Config(m.into()));
        if !(self.lambda > 0.0) {
            return bad("lambda must be positive");
        }
        if !(0.0 < self.rho0 && self.rho0 < self.rho1 && self.rho1 < self.rho2 && self.rho2 < 1.0) {
            return bad("need 0 < rho0 < rho1 < rho2 < 1");
        }
        if !(self.beta_sh > 1.0 && self.beta_gr > 1.0) {
            return bad("beta_sh and beta_gr must exceed 1");
        }
        if !(0.0 < self.eta0 && self.eta0 <= self.eta_init && self.eta_init <= self.eta1) {
            return bad("need 0 < eta0 <= eta_init <= eta1");
        }
        for a in [self.alpha_x, self.alpha_u, self.alpha_p] {
            if a != 0.0 && a != 1.0 {
                return bad("trust-region weights must be 0 or 1");
            }
        }
        if !(self.eps >= 0.0 && self.eps_r >= 0.0) {
            return bad("stopping tolerances must be nonnegative");
        }
        self.solver.validate()?;
        Ok(())
    }

    /// Both tolerances zero: run the full iteration budget.
    pub fn fixed_iterations(&self) -> bool {
        self.eps == 0.0 && self.eps_r == 0.0
    }
}

/// Assembled subproblem with handles to read the solution back.
pub struct Subproblem {
    pub program: ConicProgram,
    layout: Layout,
    nu: Vec<Vec<usize>>,
    nu_s: Vec<Vec<usize>>,
    nu_ic: Vec<usize>,
    nu_tc: Vec<usize>,
}

impl Subproblem {
    /// Unscaled solution with its virtual controls.
    pub fn extract(&self, z: &[f64]) -> TrajectoryIterate {
        let read = |vars: &[usize]| Vector::from_iterator(vars.len(), vars.iter().map(|&v| z[v]));
        let mut it = self.layout.extract(z);
        it.virtuals = Some(Virtuals {
            nu: self.nu.iter().map(|v| read(v)).collect(),
            nu_s: self.nu_s.iter().map(|v| read(v).map(|e| e.max(0.0))).collect(),
            nu_ic: read(&self.nu_ic),
            nu_tc: read(&self.nu_tc),
        });
        it
    }
}

/// Builds the convex subproblem about `reference`.
pub fn build_subproblem(
    ocp: &dyn Ocp,
    reference: &TrajectoryIterate,
    segments: &LinearizedSegmentSet,
    cost: &LinearizedCost,
    eta: f64,
    config: &ScvxConfig,
    scaling: &ScalingMap,
) -> Result<Subproblem, ScpError> {
    let dims = ocp.dims();
    let nodes = reference.len();
    let weights = trapz_weights(&reference.grid);
    let lambda = config.lambda;
    let mut b = ProgramBuilder::new();
    let l = Layout::new(&mut b, reference, scaling)?;

    let mut nu = Vec::with_capacity(nodes - 1);
    for (k, seg) in segments.segments.iter().enumerate() {
        let v = b.named_vars(seg.e.ncols(), &format!("nu{k}"));
        let nu_e: Vec<LinExpr> = v.iter().map(|&i| LinExpr::var(i)).collect();
        let e_nu = mat_exprs(&seg.e, &nu_e);
        let ax = mat_exprs(&seg.a, &l.x[k]);
        let bm = mat_exprs(&seg.b_minus, &l.u[k]);
        let bp = mat_exprs(&seg.b_plus, &l.u[k + 1]);
        let fp = mat_exprs(&seg.f, &l.p);
        for i in 0..dims.n {
            // rows are divided by the state scale for conditioning
            let row = l.x[k + 1][i]
                .clone()
                .plus_expr(&ax[i], -1.0)
                .plus_expr(&bm[i], -1.0)
                .plus_expr(&bp[i], -1.0)
                .plus_expr(&fp[i], -1.0)
                .plus_expr(&e_nu[i], -1.0)
                .plus_constant(-seg.r[i])
                .scaled(1.0 / scaling.sx[i]);
            b.zero(row);
        }
        let abs = b.abs_bounds(&e_nu);
        for a in abs {
            b.add_cost(a, lambda * weights[k]);
        }
        nu.push(v);
    }

    let mut nu_s = Vec::with_capacity(nodes);
    for k in 0..nodes {
        let map = l.map(k);
        for c in ocp.state_constraints(k).into_iter().chain(ocp.input_constraints(k)) {
            c.emit(&mut b, &map);
        }
        let node = &segments.nodes[k];
        let v = b.named_vars(dims.n_s, &format!("nu_s{k}"));
        let cx = mat_exprs(&node.c, &l.x[k]);
        let du = mat_exprs(&node.d, &l.u[k]);
        let gp = mat_exprs(&node.g, &l.p);
        for i in 0..dims.n_s {
            b.nonneg(LinExpr::var(v[i]));
            let s = cx[i].clone().plus_expr(&du[i], 1.0).plus_expr(&gp[i], 1.0).plus_constant(node.r_prime[i]);
            b.nonneg(LinExpr::var(v[i]).plus_expr(&s, -1.0));
            b.add_cost(v[i], lambda * weights[k]);
        }
        nu_s.push(v);
    }

    let boundary = |b: &mut ProgramBuilder, bd: &trajopt_ocp::Boundary, x: &[LinExpr], name: &str| {
        let v = b.named_vars(bd.l.len(), name);
        let hx = mat_exprs(&bd.h, x);
        let kp = mat_exprs(&bd.k, &l.p);
        for i in 0..bd.l.len() {
            b.zero(hx[i].clone().plus_expr(&kp[i], 1.0).plus_constant(bd.l[i]).plus(v[i], -1.0));
        }
        let vs: Vec<LinExpr> = v.iter().map(|&i| LinExpr::var(i)).collect();
        for a in b.abs_bounds(&vs) {
            b.add_cost(a, lambda);
        }
        v
    };
    let nu_ic = boundary(&mut b, &segments.initial, &l.x[0], "nu_ic");
    let nu_tc = boundary(&mut b, &segments.terminal, &l.x[nodes - 1], "nu_tc");

    let np = if config.alpha_p != 0.0 { Some(config.q.emit(&mut b, l.dp_hat())) } else { None };
    for k in 0..nodes {
        let mut tr = LinExpr::constant(-eta);
        if config.alpha_x != 0.0 {
            tr.add_expr(&config.q.emit(&mut b, l.dx_hat(k)), config.alpha_x);
        }
        if config.alpha_u != 0.0 {
            tr.add_expr(&config.q.emit(&mut b, l.du_hat(k)), config.alpha_u);
        }
        if let Some(np) = &np {
            tr.add_expr(np, config.alpha_p);
        }
        b.nonneg(tr.scaled(-1.0));
    }

    emit_terminal_cost(ocp, &mut b, &l);
    cost.emit(&mut b, &l, &weights);
    let program = b.build()?;
    Ok(Subproblem { program, layout: l, nu, nu_s, nu_ic, nu_tc })
}

/// `L_λ` of an iterate that carries virtual controls.
pub fn linear_cost(
    ocp: &dyn Ocp,
    it: &TrajectoryIterate,
    segments: &LinearizedSegmentSet,
    cost: &LinearizedCost,
    lambda: f64,
) -> Result<f64, ScpError> {
    let v = it.virtuals.as_ref().ok_or_else(|| ScpError::Inconsistent("linear cost needs virtual controls".into()))?;
    let integrand: Vec<f64> = (0..it.len())
        .map(|k| {
            let e_nu = match segments.segments.get(k) {
                Some(seg) => (&seg.e * &v.nu[k]).iter().copied().collect(),
                None => Vec::new(),
            };
            cost.eval(k, &it.x[k], &it.u[k], &it.p) + lambda * penalty(&e_nu, v.nu_s[k].as_slice())
        })
        .collect();
    Ok(terminal_cost(ocp, it)
        + lambda * penalty(v.nu_ic.as_slice(), v.nu_tc.as_slice())
        + trapz(&integrand, it.grid.dt())?)
}

/// `J_λ` and the propagation it was computed from.
pub fn nonlinear_cost(
    ocp: &dyn Ocp,
    it: &TrajectoryIterate,
    lambda: f64,
    scheme: Scheme,
) -> Result<(f64, PropagationResult), ScpError> {
    let prop = defects(ocp, it, scheme)?;
    let p = &it.p;
    let integrand: Vec<f64> = (0..it.len())
        .map(|k| {
            let (x, u) = (&it.x[k], &it.u[k]);
            let delta: Vec<f64> = prop.defects.get(k).map(|d| d.iter().copied().collect()).unwrap_or_default();
            let s_pos: Vec<f64> = ocp.path(k, x, u, p).iter().map(|s| s.max(0.0)).collect();
            trajopt_ocp::running_cost(ocp, x, u, p) + lambda * penalty(&delta, &s_pos)
        })
        .collect();
    let g_ic = ocp.initial(&it.x[0], p);
    let g_tc = ocp.terminal(it.x.last().expect("grid has nodes"), p);
    let j = terminal_cost(ocp, it)
        + lambda * penalty(g_ic.as_slice(), g_tc.as_slice())
        + trapz(&integrand, it.grid.dt())?;
    Ok((j, prop))
}

/// `ρ = (J̄ − J*) / (J̄ − L*)`. Returns `None` when the predicted decrease is
/// below [`DENOMINATOR_GUARD`], which the caller treats as convergence.
pub fn accuracy_ratio(j_ref: f64, j_star: f64, l_star: f64) -> Result<Option<f64>, ScpError> {
    let den = j_ref - l_star;
    if den < -DENOMINATOR_SLACK * j_ref.abs().max(1.0) {
        return Err(ScpError::Inconsistent(format!("negative predicted decrease {den:.3e}")));
    }
    if den <= DENOMINATOR_GUARD {
        return Ok(None);
    }
    Ok(Some((j_ref - j_star) / den))
}

/// Returns `(accept, η′)`.
pub fn update_trust_region(rho: f64, eta: f64, c: &ScvxConfig) -> (bool, f64) {
    if rho < c.rho0 {
        (false, (eta / c.beta_sh).max(c.eta0))
    } else if rho < c.rho1 {
        (true, (eta / c.beta_sh).max(c.eta0))
    } else if rho < c.rho2 {
        (true, eta)
    } else {
        (true, (eta * c.beta_gr).min(c.eta1))
    }
}

/// Small scaled step in `(x, p)` or small predicted decrease.
pub fn stopping(
    reference: &TrajectoryIterate,
    solution: &TrajectoryIterate,
    scaling: &ScalingMap,
    j_ref: f64,
    l_star: f64,
    c: &ScvxConfig,
) -> bool {
    let dp = scaling.scale_p(&solution.p) - scaling.scale_p(&reference.p);
    let dx = reference
        .x
        .iter()
        .zip(&solution.x)
        .map(|(a, b)| c.q_hat.eval((scaling.scale_x(b) - scaling.scale_x(a)).as_slice()))
        .fold(0.0, f64::max);
    let step = c.q_hat.eval(dp.as_slice()) + dx;
    (c.eps > 0.0 && step <= c.eps) || (c.eps_r > 0.0 && j_ref - l_star <= c.eps_r * j_ref.abs())
}

/// Largest virtual control, with dynamics terms divided by the state scale.
pub fn virtual_norm(it: &TrajectoryIterate, segments: &LinearizedSegmentSet, scaling: &ScalingMap) -> Option<f64> {
    let v = it.virtuals.as_ref()?;
    let dyn_part = segments
        .segments
        .iter()
        .zip(&v.nu)
        .map(|(s, nu)| (&s.e * nu).component_div(&scaling.sx).amax())
        .fold(0.0, f64::max);
    let rest = v.nu_s.iter().map(|n| n.amax()).fold(v.nu_ic.amax().max(v.nu_tc.amax()), f64::max);
    Some(dyn_part.max(rest))
}

/// Runs SCvx from `guess` (projected onto the convex path constraints first).
pub fn run(
    ocp: &dyn Ocp,
    guess: &TrajectoryIterate,
    config: &ScvxConfig,
    scaling: &ScalingMap,
    scheme: Scheme,
) -> Result<ScpReport, ScpError> {
    config.validate()?;
    let mut reference = project_guess(ocp, guess, scaling)?;
    let (mut j_ref, _) = nonlinear_cost(ocp, &reference, config.lambda, scheme)?;
    let mut eta = config.eta_init;
    let mut records = Vec::new();
    let mut total = Timing::default();
    let mut outcome = Outcome::MaxIterations;
    let mut model: Option<(LinearizedSegmentSet, LinearizedCost)> = None;
    let mut final_virtual = None;

    for iter in 0..config.max_iters {
        let mut timing = Timing::default();
        if model.is_none() {
            let t = Instant::now();
            let segments = discretize(ocp, &reference, scheme)?;
            let cost = LinearizedCost::new(ocp, &reference)?;
            timing.discretize_ms = ms_since(t);
            model = Some((segments, cost));
        }
        let (segments, cost) = model.as_ref().expect("model built above");

        let t = Instant::now();
        let sub = build_subproblem(ocp, &reference, segments, cost, eta, config, scaling)?;
        timing.formulate_ms = ms_since(t);

        let t = Instant::now();
        let (sol, stats) = solve_checked(&sub.program, &config.solver, iter)?;
        timing.solve_ms = ms_since(t);

        let candidate = sub.extract(&sol.primal);
        let l_star = linear_cost(ocp, &candidate, segments, cost, config.lambda)?;
        let (j_star, _) = nonlinear_cost(ocp, &candidate, config.lambda, scheme)?;
        let vnorm = virtual_norm(&candidate, segments, scaling);

        let ratio = accuracy_ratio(j_ref, j_star, l_star)?;
        let stop = stopping(&reference, &candidate, scaling, j_ref, l_star, config);
        let (accepted, eta_next, converged, rho) = match ratio {
            _ if stop => (true, eta, true, ratio),
            None => (true, eta, !config.fixed_iterations(), None),
            Some(rho) => {
                let (acc, e) = update_trust_region(rho, eta, config);
                (acc, e, false, Some(rho))
            }
        };
        log::info!(
            "scvx {iter:>3}: L*={l_star:.6e} J*={j_star:.6e} Jref={j_ref:.6e} rho={} eta={eta:.3e} acc={accepted} vc={:.2e}",
            rho.map_or("-".to_string(), |r| format!("{r:.4}")),
            vnorm.unwrap_or(0.0)
        );
        records.push(IterationRecord {
            iter,
            cost_linear: l_star,
            cost_reference: j_ref,
            cost_nonlinear: j_star,
            rho,
            eta,
            eta_next,
            lambda: config.lambda,
            lambda_next: config.lambda,
            accepted,
            converged,
            virtual_norm: vnorm,
            trust_violated: None,
            state_violated: None,
            solver: stats,
            timing,
        });
        total.formulate_ms += timing.formulate_ms;
        total.discretize_ms += timing.discretize_ms;
        total.solve_ms += timing.solve_ms;
        eta = eta_next;
        if accepted {
            reference = candidate;
            j_ref = j_star;
            final_virtual = vnorm;
            model = None;
        }
        if converged {
            outcome = Outcome::Converged;
            break;
        }
    }

    Ok(ScpReport {
        algorithm: Algorithm::Scvx,
        outcome,
        iterations: records,
        trajectory: reference,
        final_lambda: config.lambda,
        final_eta: eta,
        virtual_norm: final_virtual,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ScvxConfig {
        ScvxConfig { rho0: 0.1, rho1: 0.3, rho2: 0.7, eta0: 0.1, eta1: 1.5, ..Default::default() }
    }

    #[test]
    fn trust_region_bands() {
        assert_eq!(update_trust_region(0.05, 1.0, &cfg()), (false, 0.5));
        assert_eq!(update_trust_region(0.2, 1.0, &cfg()), (true, 0.5));
        assert_eq!(update_trust_region(0.5, 1.0, &cfg()), (true, 1.0));
        assert_eq!(update_trust_region(0.9, 1.0, &cfg()), (true, 1.5));
        assert_eq!(update_trust_region(0.0, 0.15, &cfg()), (false, 0.1));
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(accuracy_ratio(10.0, 5.0, 5.0).unwrap(), Some(1.0));
        assert_eq!(accuracy_ratio(10.0, 10.0, 5.0).unwrap(), Some(0.0));
        assert!((accuracy_ratio(10.0, 6.0, 5.0).unwrap().unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(accuracy_ratio(10.0, 9.0, 10.0).unwrap(), None);
        assert!(accuracy_ratio(1.0, 1.0, 1.1).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ScvxConfig::default().validate().is_ok());
        assert!(ScvxConfig { rho0: 0.5, ..Default::default() }.validate().is_err());
        assert!(ScvxConfig { eta_init: 100.0, ..Default::default() }.validate().is_err());
        assert!(ScvxConfig { alpha_u: 0.5, ..Default::default() }.validate().is_err());
        assert!(ScvxConfig { eps: 0.0, eps_r: 0.0, ..Default::default() }.fixed_iterations());
    }
}
