//! 3-DoF powered descent guidance as a lossless convex relaxation, in the
//! `(r, v, z = ln m)` variables with acceleration `u = T/m` and slack `ξ`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use ode_solvers::dop_shared::{OutputType, System};
use ode_solvers::Dopri5;
use serde::{Deserialize, Serialize};
use trajopt_conic::{solve, ConicProgram, LinExpr, ProgramBuilder, SolverSettings, Status};

use crate::golden::golden_section;
use crate::{node_gaps, LcvxError};

const KMH: f64 = 1.0 / 3.6;
const DEG: f64 = std::f64::consts::PI / 180.0;

/// Powered descent parameters, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdgParams {
    pub gravity: [f64; 3],
    pub m_dry: f64,
    pub m_wet: f64,
    pub isp: f64,
    pub g_e: f64,
    /// Planet angular velocity (rad/s).
    pub omega: [f64; 3],
    pub rho_min: f64,
    pub rho_max: f64,
    /// Glideslope angle from the vertical (rad).
    pub gamma_gs: f64,
    /// Pointing cone half-angle (rad).
    pub gamma_p: f64,
    pub v_max: f64,
    pub r0: [f64; 3],
    pub v0: [f64; 3],
    /// ZOH step (s).
    pub dt: f64,
}

impl Default for PdgParams {
    fn default() -> Self {
        Self {
            gravity: [0.0, 0.0, -3.71],
            m_dry: 1505.0,
            m_wet: 1905.0,
            isp: 225.0,
            g_e: 9.807,
            omega: [3.5e-3 * DEG, 0.0, 2e-3 * DEG],
            rho_min: 4971.0,
            rho_max: 13258.0,
            gamma_gs: 86.0 * DEG,
            gamma_p: 40.0 * DEG,
            v_max: 500.0 * KMH,
            r0: [2000.0, 0.0, 1500.0],
            v0: [288.0 * KMH, 108.0 * KMH, -270.0 * KMH],
            dt: 1.0,
        }
    }
}

impl PdgParams {
    /// Fuel consumption rate `1/(I_sp g_e)`.
    pub fn alpha(&self) -> f64 {
        1.0 / (self.isp * self.g_e)
    }

    pub fn validate(&self) -> Result<(), LcvxError> {
        let scalars = [
            self.m_dry,
            self.m_wet,
            self.isp,
            self.g_e,
            self.rho_min,
            self.rho_max,
            self.gamma_gs,
            self.gamma_p,
            self.v_max,
            self.dt,
        ];
        let vectors = [self.gravity, self.omega, self.r0, self.v0];
        let finite = scalars.iter().all(|v| v.is_finite()) && vectors.iter().flatten().all(|v| v.is_finite());
        let bad = |msg: &str| Err(LcvxError::Params(msg.to_string()));
        if !finite {
            return bad("non-finite parameter");
        }
        if !(0.0 < self.rho_min && self.rho_min < self.rho_max) {
            return bad("need 0 < rho_min < rho_max");
        }
        if !(0.0 < self.m_dry && self.m_dry < self.m_wet) {
            return bad("need 0 < m_dry < m_wet");
        }
        if !(0.0 < self.gamma_p && self.gamma_p < std::f64::consts::FRAC_PI_2) {
            return bad("gamma_p must lie in (0, pi/2)");
        }
        if !(0.0 < self.gamma_gs && self.gamma_gs < std::f64::consts::FRAC_PI_2) {
            return bad("gamma_gs must lie in (0, pi/2)");
        }
        if self.isp <= 0.0 || self.g_e <= 0.0 || self.v_max <= 0.0 || self.dt <= 0.0 {
            return bad("isp, g_e, v_max and dt must be positive");
        }
        Ok(())
    }

    fn skew_omega(&self) -> Matrix3<f64> {
        Vector3::from(self.omega).cross_matrix()
    }

    /// Continuous dynamics of `(r, v, z)` driven by `(u, ξ)`, plus the
    /// constant gravity drift.
    pub fn continuous(&self) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let w = self.skew_omega();
        let mut a = DMatrix::zeros(7, 7);
        a.view_mut((0, 3), (3, 3)).fill_with_identity();
        a.view_mut((3, 0), (3, 3)).copy_from(&(-(w * w)));
        a.view_mut((3, 3), (3, 3)).copy_from(&(-2.0 * w));
        let mut b = DMatrix::zeros(7, 4);
        b.view_mut((3, 0), (3, 3)).fill_with_identity();
        b[(6, 3)] = -self.alpha();
        let mut c = DVector::zeros(7);
        c.rows_mut(3, 3).copy_from_slice(&self.gravity);
        (a, b, c)
    }

    /// ZOH discretization over a step `h` through the exponential of the
    /// augmented matrix `[A B c; 0 0 0]`.
    pub fn zoh(&self, h: f64) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let (a, b, c) = self.continuous();
        let mut m = DMatrix::zeros(12, 12);
        m.view_mut((0, 0), (7, 7)).copy_from(&a);
        m.view_mut((0, 7), (7, 4)).copy_from(&b);
        m.view_mut((0, 11), (7, 1)).copy_from(&c);
        let e = (m * h).exp();
        (
            e.view((0, 0), (7, 7)).into_owned(),
            e.view((0, 7), (7, 4)).into_owned(),
            e.view((0, 11), (7, 1)).column(0).into_owned(),
        )
    }

    /// Node count and step for a final time: `N = round(tf/Δt) + 1`.
    pub fn grid(&self, tf: f64) -> Result<(usize, f64), LcvxError> {
        if !(tf.is_finite() && tf >= self.dt) {
            return Err(LcvxError::Params(format!("tf = {tf} is shorter than one step of {}", self.dt)));
        }
        let n = (tf / self.dt).round() as usize + 1;
        Ok((n, tf / (n - 1) as f64))
    }
}

/// Variable indices of a built PDG program.
#[derive(Debug, Clone)]
pub struct PdgProgram {
    pub program: ConicProgram,
    pub tf: f64,
    pub dt: f64,
    pub t: Vec<f64>,
    pub r: Vec<[usize; 3]>,
    pub v: Vec<[usize; 3]>,
    pub z: Vec<usize>,
    pub u: Vec<[usize; 3]>,
    pub xi: Vec<usize>,
    /// Lower z bound, `ln(m_wet − αρ_max t)`, also the Taylor expansion point.
    pub z0: Vec<f64>,
    pub zmax: Vec<f64>,
    pub mu_min: Vec<f64>,
    pub mu_max: Vec<f64>,
}

/// Builds the relaxed descent problem on the ZOH grid for a final time `tf`.
/// The input is held through the last node, which only enters the cost.
pub fn build_pdg(params: &PdgParams, tf: f64) -> Result<PdgProgram, LcvxError> {
    params.validate()?;
    let (n, dt) = params.grid(tf)?;
    let alpha = params.alpha();
    if params.m_wet - alpha * params.rho_max * tf <= 0.0 {
        return Err(LcvxError::Params(format!("tf = {tf} burns more than the wet mass at full thrust")));
    }
    let (ad, bd, wd) = params.zoh(dt);
    let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let z0: Vec<f64> = t.iter().map(|&t| (params.m_wet - alpha * params.rho_max * t).ln()).collect();
    let zmax: Vec<f64> = t.iter().map(|&t| (params.m_wet - alpha * params.rho_min * t).ln()).collect();
    let mu_min: Vec<f64> = z0.iter().map(|z| params.rho_min * (-z).exp()).collect();
    let mu_max: Vec<f64> = z0.iter().map(|z| params.rho_max * (-z).exp()).collect();

    let mut b = ProgramBuilder::new();
    let tri = |b: &mut ProgramBuilder, name: &str| -> Vec<[usize; 3]> {
        (0..n)
            .map(|_| {
                let v = b.named_vars(3, name);
                [v[0], v[1], v[2]]
            })
            .collect()
    };
    let r = tri(&mut b, "r");
    let v = tri(&mut b, "v");
    let z = b.named_vars(n, "z");
    let u = tri(&mut b, "u");
    let xi = b.named_vars(n, "xi");
    let state = |k: usize| -> [usize; 7] { [r[k][0], r[k][1], r[k][2], v[k][0], v[k][1], v[k][2], z[k]] };
    let input = |k: usize| -> [usize; 4] { [u[k][0], u[k][1], u[k][2], xi[k]] };

    for i in 0..3 {
        b.zero(LinExpr::var(r[0][i]).plus_constant(-params.r0[i]));
        b.zero(LinExpr::var(v[0][i]).plus_constant(-params.v0[i]));
        b.zero(LinExpr::var(r[n - 1][i]));
        b.zero(LinExpr::var(v[n - 1][i]));
    }
    b.zero(LinExpr::var(z[0]).plus_constant(-params.m_wet.ln()));
    b.nonneg(LinExpr::var(z[n - 1]).plus_constant(-params.m_dry.ln()));

    for k in 0..n - 1 {
        let (xk, uk, xn) = (state(k), input(k), state(k + 1));
        for i in 0..7 {
            let mut e = LinExpr::term(xn[i], -1.0);
            for j in 0..7 {
                if ad[(i, j)] != 0.0 {
                    e.add(xk[j], ad[(i, j)]);
                }
            }
            for j in 0..4 {
                if bd[(i, j)] != 0.0 {
                    e.add(uk[j], bd[(i, j)]);
                }
            }
            e.add_constant(wd[i]);
            b.zero(e);
        }
    }
    for (a, c) in input(n - 1).iter().zip(input(n - 2)) {
        b.zero(LinExpr::var(*a).plus(c, -1.0));
    }

    let cot = 1.0 / params.gamma_gs.tan();
    let cos_p = params.gamma_p.cos();
    for k in 0..n {
        b.soc(LinExpr::var(xi[k]), u[k].iter().map(|&i| LinExpr::var(i)).collect());
        b.nonneg(LinExpr::var(u[k][2]).plus(xi[k], -cos_p));
        // ξ ≥ μ_min (1 − δz + δz²/2) through q ≥ δz²
        let dz = LinExpr::var(z[k]).plus_constant(-z0[k]);
        let q = b.var();
        b.square_epigraph(&LinExpr::var(q), vec![dz.clone()]);
        b.nonneg(
            LinExpr::var(xi[k])
                .plus_constant(-mu_min[k])
                .plus_expr(&dz, mu_min[k])
                .plus(q, -0.5 * mu_min[k]),
        );
        b.nonneg(LinExpr::term(xi[k], -1.0).plus_constant(mu_max[k]).plus_expr(&dz, -mu_max[k]));
        b.nonneg(dz.clone());
        b.nonneg(LinExpr::term(z[k], -1.0).plus_constant(zmax[k]));
        b.soc(LinExpr::constant(params.v_max), v[k].iter().map(|&i| LinExpr::var(i)).collect());
        for (axis, sign) in [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)] {
            b.nonneg(LinExpr::var(r[k][2]).plus(r[k][axis], -cot * sign));
        }
        let wk = if k == 0 || k == n - 1 { dt / 2.0 } else { dt };
        b.add_cost(xi[k], wk);
    }

    Ok(PdgProgram { program: b.build()?, tf, dt, t, r, v, z, u, xi, z0, zmax, mu_min, mu_max })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdgSolution {
    pub tf: f64,
    pub t: Vec<f64>,
    pub r: Vec<[f64; 3]>,
    pub v: Vec<[f64; 3]>,
    pub z: Vec<f64>,
    pub u: Vec<[f64; 3]>,
    pub xi: Vec<f64>,
    pub mass: Vec<f64>,
    /// `m_k ‖u_k‖` (N).
    pub thrust: Vec<f64>,
    /// `∫ξ` by the trapezoid rule.
    pub cost: f64,
    /// `m_wet − m_N` (kg).
    pub fuel: f64,
    /// `ξ_k − ‖u_k‖` at every node.
    pub node_gaps: Vec<f64>,
    pub equality_gap: f64,
    /// Nodes (excluding the touchdown node) with a glideslope row within 1 mm of active.
    pub glideslope_active: usize,
    pub velocity_active: usize,
    pub mu_min: Vec<f64>,
    pub mu_max: Vec<f64>,
    pub z0: Vec<f64>,
    pub reduced_accuracy: bool,
}

/// Builds and solves the relaxation at `tf`.
pub fn solve_pdg(params: &PdgParams, tf: f64) -> Result<PdgSolution, LcvxError> {
    let built = build_pdg(params, tf)?;
    let sol = solve(&built.program, &SolverSettings::default())?;
    if sol.status != Status::Optimal {
        return Err(LcvxError::Solve { tf, status: sol.status });
    }
    let x = &sol.primal;
    let tri = |ids: &[[usize; 3]]| ids.iter().map(|i| [x[i[0]], x[i[1]], x[i[2]]]).collect::<Vec<_>>();
    let (r, v, u) = (tri(&built.r), tri(&built.v), tri(&built.u));
    let z: Vec<f64> = built.z.iter().map(|&i| x[i]).collect();
    let xi: Vec<f64> = built.xi.iter().map(|&i| x[i]).collect();
    let mass: Vec<f64> = z.iter().map(|z| z.exp()).collect();
    let norm = |a: &[f64; 3]| Vector3::from(*a).norm();
    let thrust = mass.iter().zip(&u).map(|(m, uk)| m * norm(uk)).collect();
    let uvec: Vec<Vec<f64>> = u.iter().map(|a| a.to_vec()).collect();
    let gaps = node_gaps(&xi, &uvec);
    let n = xi.len();
    let cot = 1.0 / params.gamma_gs.tan();
    let glideslope_active = r[..n - 1]
        .iter()
        .filter(|rk| {
            let slack = (rk[2] - cot * rk[0].abs()).min(rk[2] - cot * rk[1].abs());
            slack <= 1e-3
        })
        .count();
    let velocity_active = v.iter().filter(|vk| norm(vk) >= params.v_max - 1e-3).count();
    Ok(PdgSolution {
        tf,
        t: built.t.clone(),
        cost: (0..n - 1).map(|k| built.dt / 2.0 * (xi[k] + xi[k + 1])).sum(),
        fuel: params.m_wet - mass[n - 1],
        equality_gap: gaps.iter().copied().fold(0.0, f64::max),
        node_gaps: gaps,
        glideslope_active,
        velocity_active,
        r,
        v,
        z,
        u,
        xi,
        mass,
        thrust,
        mu_min: built.mu_min,
        mu_max: built.mu_max,
        z0: built.z0,
        reduced_accuracy: sol.reduced_accuracy,
    })
}

/// Golden-section search of the final time minimising `∫ξ`, stopping once
/// the bracket is at most one ZOH step wide.
pub fn golden_search_tf(params: &PdgParams, bracket: (f64, f64)) -> Result<(f64, PdgSolution), LcvxError> {
    params.validate()?;
    let (lo, hi) = bracket;
    let res = golden_section(
        |tf| match solve_pdg(params, tf) {
            Ok(s) => Some((s.cost, s)),
            Err(e) => {
                log::debug!("tf = {tf}: {e}");
                None
            }
        },
        lo,
        hi,
        params.dt,
    )
    .ok_or(LcvxError::NoFeasiblePoint { lo, hi })?;
    log::info!("golden search: tf* = {:.3} after {} solves", res.x, res.evaluations);
    Ok((res.x, res.payload))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdgPropagation {
    pub t_dense: Vec<f64>,
    /// `(r, v, m)` at each dense time.
    pub x_dense: Vec<[f64; 7]>,
    pub node_position_error: Vec<f64>,
    pub max_position_error: f64,
    pub max_velocity_error: f64,
    pub max_mass_error: f64,
    pub final_mass: f64,
}

struct Descent {
    w: Matrix3<f64>,
    g: Vector3<f64>,
    u: Vector3<f64>,
    alpha: f64,
}

impl System<f64, DVector<f64>> for &Descent {
    fn system(&self, _t: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let r = Vector3::new(y[0], y[1], y[2]);
        let v = Vector3::new(y[3], y[4], y[5]);
        let acc = self.u + self.g - self.w * (self.w * r) - 2.0 * self.w * v;
        dy.rows_mut(0, 3).copy_from(&v);
        dy.rows_mut(3, 3).copy_from(&acc);
        // T = m u, so ṁ = −α m ‖u‖
        dy[6] = -self.alpha * y[6] * self.u.norm();
    }
}

/// Integrates the nonlinear mass-depleting dynamics open loop from the
/// initial state, holding the acceleration command `u_k` over each step.
pub fn propagate_pdg(params: &PdgParams, sol: &PdgSolution) -> Result<PdgPropagation, LcvxError> {
    propagate_pdg_nodes(params, &PdgNodes { t: &sol.t, r: &sol.r, v: &sol.v, mass: &sol.mass, u: &sol.u })
}

/// Node arrays of a descent trajectory, enough to propagate and compare.
#[derive(Debug, Clone, Copy)]
pub struct PdgNodes<'a> {
    pub t: &'a [f64],
    pub r: &'a [[f64; 3]],
    pub v: &'a [[f64; 3]],
    pub mass: &'a [f64],
    pub u: &'a [[f64; 3]],
}

/// [`propagate_pdg`] on bare node arrays.
pub fn propagate_pdg_nodes(params: &PdgParams, sol: &PdgNodes) -> Result<PdgPropagation, LcvxError> {
    let n = sol.t.len();
    let lens = [sol.r.len(), sol.v.len(), sol.mass.len(), sol.u.len()];
    if n < 2 || lens.iter().any(|&l| l != n) {
        return Err(LcvxError::Params(format!("node arrays of lengths {n} and {lens:?}")));
    }
    let mut y = DVector::from_iterator(
        7,
        params.r0.iter().chain(params.v0.iter()).copied().chain(std::iter::once(params.m_wet)),
    );
    let mut t_dense = vec![0.0];
    let mut x_dense = vec![to_array(&y)];
    let mut node_position_error = vec![0.0];
    let (mut pos, mut vel, mut mass) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..n - 1 {
        let (t0, t1) = (sol.t[k], sol.t[k + 1]);
        let sys = Descent {
            w: params.skew_omega(),
            g: Vector3::from(params.gravity),
            u: Vector3::from(sol.u[k]),
            alpha: params.alpha(),
        };
        // dense samples for the artifact, a sparse run for the node state
        let mut dense = Dopri5::new(&sys, t0, t1, (t1 - t0) / 10.0, y.clone(), 1e-10, 1e-10);
        dense.set_output(OutputType::Dense);
        dense.integrate().map_err(|e| LcvxError::Integration(format!("interval {k}: {e}")))?;
        let (ts, ys) = dense.results().get();
        for (t, yi) in ts.iter().zip(ys).skip(1).filter(|(t, _)| **t < t1 - 1e-9) {
            t_dense.push(*t);
            x_dense.push(to_array(yi));
        }
        let mut sparse = Dopri5::new(&sys, t0, t1, t1 - t0, y.clone(), 1e-10, 1e-10);
        sparse.set_output(OutputType::Sparse);
        sparse.integrate().map_err(|e| LcvxError::Integration(format!("interval {k}: {e}")))?;
        y = sparse.results().get().1.last().cloned().unwrap_or(y);
        t_dense.push(t1);
        x_dense.push(to_array(&y));
        let dr = (y.rows(0, 3) - Vector3::from(sol.r[k + 1])).norm();
        let dv = (y.rows(3, 3) - Vector3::from(sol.v[k + 1])).norm();
        node_position_error.push(dr);
        pos = pos.max(dr);
        vel = vel.max(dv);
        mass = mass.max((y[6] - sol.mass[k + 1]).abs());
    }
    Ok(PdgPropagation {
        t_dense,
        x_dense,
        node_position_error,
        max_position_error: pos,
        max_velocity_error: vel,
        max_mass_error: mass,
        final_mass: y[6],
    })
}

fn to_array(y: &DVector<f64>) -> [f64; 7] {
    let mut a = [0.0; 7];
    a.copy_from_slice(y.as_slice());
    a
}
