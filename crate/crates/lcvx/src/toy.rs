//! Minimum-effort double integrator with friction and a nonconvex input set
//! `1 ≤ |u| ≤ 2`, relaxed to `|u| ≤ σ`, `1 ≤ σ ≤ 2`.

use serde::{Deserialize, Serialize};
use trajopt_conic::{solve, LinExpr, ProgramBuilder, SolverSettings, Status};

use crate::golden::golden_section;
use crate::{lcvx_equality_gap, node_gaps, LcvxError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyParams {
    /// Friction deceleration (m/s²).
    pub g: f64,
    /// Target distance (m).
    pub s: f64,
    pub tf: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub u_min: f64,
    pub u_max: f64,
}

impl Default for ToyParams {
    fn default() -> Self {
        Self { g: 0.1, s: 47.0, tf: 10.0, n: 50, u_min: 1.0, u_max: 2.0 }
    }
}

impl ToyParams {
    pub fn validate(&self) -> Result<(), LcvxError> {
        let finite = [self.g, self.s, self.tf, self.u_min, self.u_max].iter().all(|v| v.is_finite());
        if !finite || self.tf <= 0.0 || self.n < 2 || !(0.0 < self.u_min && self.u_min < self.u_max) {
            return Err(LcvxError::Params(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySolution {
    pub params: ToyParams,
    pub t: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub u: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `∫σ²` by the trapezoid rule.
    pub cost: f64,
    /// Largest `σ_k − |u_k|` over `k ≥ 2`.
    pub equality_gap: f64,
    pub node_gaps: Vec<f64>,
    /// `max(|x₁(t_f) − s|, |x₂(t_f)|)`.
    pub boundary_residual: f64,
    pub reduced_accuracy: bool,
}

/// FOH discretization of `ẋ₁ = x₂, ẋ₂ = u − g` over a step `h`, in closed
/// form: `x⁺ = A x + B⁻ u_k + B⁺ u_{k+1} + w`.
pub fn foh_matrices(h: f64, g: f64) -> ([[f64; 2]; 2], [f64; 2], [f64; 2], [f64; 2]) {
    (
        [[1.0, h], [0.0, 1.0]],
        [h * h / 3.0, h / 2.0],
        [h * h / 6.0, h / 2.0],
        [-g * h * h / 2.0, -g * h],
    )
}

/// Solves the FOH-discretized relaxation. Infeasible final times are
/// reported as [`LcvxError::Solve`].
pub fn solve_toy(params: &ToyParams) -> Result<ToySolution, LcvxError> {
    params.validate()?;
    let n = params.n;
    let h = params.tf / (n - 1) as f64;
    let (a, bm, bp, w) = foh_matrices(h, params.g);

    let mut b = ProgramBuilder::new();
    let x1 = b.named_vars(n, "x1");
    let x2 = b.named_vars(n, "x2");
    let u = b.named_vars(n, "u");
    let sigma = b.named_vars(n, "sigma");
    let tau = b.named_vars(n, "tau");

    b.zero(LinExpr::var(x1[0]));
    b.zero(LinExpr::var(x2[0]));
    b.zero(LinExpr::var(x1[n - 1]).plus_constant(-params.s));
    b.zero(LinExpr::var(x2[n - 1]));
    for k in 0..n - 1 {
        let x = [x1[k], x2[k]];
        let next = [x1[k + 1], x2[k + 1]];
        for i in 0..2 {
            let mut e = LinExpr::term(next[i], -1.0);
            e.add(x[0], a[i][0]).add(x[1], a[i][1]);
            e.add(u[k], bm[i]).add(u[k + 1], bp[i]).add_constant(w[i]);
            b.zero(e);
        }
    }
    for k in 0..n {
        b.nonneg(LinExpr::var(sigma[k]).plus_constant(-params.u_min));
        b.nonneg(LinExpr::term(sigma[k], -1.0).plus_constant(params.u_max));
        b.nonneg(LinExpr::var(sigma[k]).plus(u[k], -1.0));
        b.nonneg(LinExpr::var(sigma[k]).plus(u[k], 1.0));
        b.square_epigraph(&LinExpr::var(tau[k]), vec![LinExpr::var(sigma[k])]);
        let wk = if k == 0 || k == n - 1 { h / 2.0 } else { h };
        b.add_cost(tau[k], wk);
    }

    let program = b.build()?;
    let sol = solve(&program, &SolverSettings::default())?;
    if sol.status != Status::Optimal {
        return Err(LcvxError::Solve { tf: params.tf, status: sol.status });
    }
    let pick = |ids: &[usize]| ids.iter().map(|&i| sol.primal[i]).collect::<Vec<_>>();
    let (x1v, x2v, uv, sv) = (pick(&x1), pick(&x2), pick(&u), pick(&sigma));
    let uvec: Vec<Vec<f64>> = uv.iter().map(|&v| vec![v]).collect();
    let cost = (0..n - 1).map(|k| h / 2.0 * (sv[k] * sv[k] + sv[k + 1] * sv[k + 1])).sum();
    Ok(ToySolution {
        params: *params,
        t: (0..n).map(|k| k as f64 * h).collect(),
        equality_gap: lcvx_equality_gap(&sv, &uvec),
        node_gaps: node_gaps(&sv, &uvec),
        boundary_residual: (x1v[n - 1] - params.s).abs().max(x2v[n - 1].abs()),
        x1: x1v,
        x2: x2v,
        u: uv,
        sigma: sv,
        cost,
        reduced_accuracy: sol.reduced_accuracy,
    })
}

/// Golden-section search of the final time minimising `∫σ²` over
/// `[lo, hi]`, to a bracket width `tol`.
pub fn optimal_toy_time(params: &ToyParams, lo: f64, hi: f64, tol: f64) -> Result<ToySolution, LcvxError> {
    let res = golden_section(
        |tf| {
            let p = ToyParams { tf, ..*params };
            solve_toy(&p).ok().map(|s| (s.cost, s))
        },
        lo,
        hi,
        tol,
    );
    res.map(|r| r.payload).ok_or(LcvxError::NoFeasiblePoint { lo, hi })
}
