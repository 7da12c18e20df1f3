//! Independent checks of a final trajectory: nonlinear propagation with the
//! discretized control, dense path-constraint evaluation, convex constraint
//! and boundary residuals.

use nalgebra::{dvector, Vector3};
use serde::{Deserialize, Serialize};
use trajopt_lcvx::{build_pdg, propagate_pdg_nodes, PdgNodes, PdgParams, ToyParams};
use trajopt_ocp::{
    defects, flow_map, make_scaling, AffineForm, Bounds, ConvexConstraint, Dims, Matrix, Ocp, Scheme, TimeGrid,
    TrajectoryIterate, Var, Vector,
};
use trajopt_vehicles::{freeflyer_guess, quadrotor_guess, FreeFlyer, Quadrotor, VehicleError};

/// Tolerance on every node-level check for a run to count as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Sub-steps per interval in the dense propagation.
pub const DENSE_SUBSTEPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    /// Largest multiple-shooting defect (interval restarted at each node).
    pub max_defect: Option<f64>,
    /// Open-loop deviation from each node, propagated from the initial state.
    pub node_deviation: Vec<f64>,
    pub max_node_deviation: Option<f64>,
    /// Largest `σ − ‖u‖` gap of the relaxed input set, relative to the input scale.
    pub lcvx_gap: Option<f64>,
    /// Worst convex or path constraint violation at the nodes.
    pub max_constraint_violation: f64,
    /// Worst path constraint value at the nodes (`≤ 0` is feasible); `None`
    /// when the case has no path constraints.
    pub node_path_value: Option<f64>,
    /// Worst path constraint value along the dense propagation.
    pub dense_path_value: Option<f64>,
    pub boundary_residual: f64,
    /// `"scaled"` when deviations are divided by the state scaling, `"si"` otherwise.
    pub units: String,
    pub propagation_error: Option<String>,
}

impl Checks {
    /// Names of the node-level checks that exceed [`FEASIBILITY_TOL`].
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        match (self.max_defect, &self.propagation_error) {
            (Some(d), _) if d <= FEASIBILITY_TOL => {}
            (Some(d), _) => out.push(format!("max_defect {d:.3e}")),
            (None, e) => out.push(format!("propagation failed: {}", e.as_deref().unwrap_or("unknown"))),
        }
        if let Some(g) = self.lcvx_gap.filter(|&g| g > FEASIBILITY_TOL) {
            out.push(format!("lcvx_gap {g:.3e}"));
        }
        if self.max_constraint_violation > FEASIBILITY_TOL {
            out.push(format!("max_constraint_violation {:.3e}", self.max_constraint_violation));
        }
        if self.boundary_residual > FEASIBILITY_TOL {
            out.push(format!("boundary_residual {:.3e}", self.boundary_residual));
        }
        out
    }
}

/// Propagated states over one interval, interval endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseInterval {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub checks: Checks,
    pub dense: Vec<DenseInterval>,
}

/// A vehicle problem together with its node-wise path constraint oracle.
pub enum Vehicle {
    Quadrotor(Quadrotor),
    Freeflyer(FreeFlyer),
}

impl Vehicle {
    pub fn ocp(&self) -> &dyn Ocp {
        match self {
            Vehicle::Quadrotor(q) => q,
            Vehicle::Freeflyer(f) => f,
        }
    }

    pub fn guess(&self, grid: TimeGrid) -> Result<TrajectoryIterate, VehicleError> {
        match self {
            Vehicle::Quadrotor(q) => quadrotor_guess(&q.params, grid),
            Vehicle::Freeflyer(f) => freeflyer_guess(f, grid),
        }
    }

    /// Worst path constraint value at a state, with the exact flight-space
    /// SDF for the free-flyer.
    pub fn path_value(&self, x: &Vector) -> f64 {
        let r = Vector3::new(x[0], x[1], x[2]);
        match self {
            Vehicle::Quadrotor(q) => q.params.obstacles.iter().map(|o| o.value(&r)).fold(f64::NEG_INFINITY, f64::max),
            Vehicle::Freeflyer(f) => {
                let obstacles = f.params.obstacles.iter().map(|o| o.value(&r));
                obstacles.fold(-f.params.sdf(&r), f64::max)
            }
        }
    }

    /// `max |‖a‖ − σ| / a_max` for the quadrotor.
    pub fn lcvx_gap(&self, it: &TrajectoryIterate) -> Option<f64> {
        match self {
            Vehicle::Quadrotor(q) => Some(
                it.u.iter()
                    .map(|u| (Vector3::new(u[0], u[1], u[2]).norm() - u[3]).abs() / q.params.a_max)
                    .fold(0.0, f64::max),
            ),
            Vehicle::Freeflyer(_) => None,
        }
    }
}

fn fold_max(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NEG_INFINITY, f64::max)
}

/// Chains the flow map from `x_0` through every interval, `substeps` pieces
/// per interval, with the input held as the discretization holds it.
fn open_loop(
    ocp: &dyn Ocp,
    it: &TrajectoryIterate,
    scheme: Scheme,
    substeps: usize,
) -> Result<Vec<DenseInterval>, trajopt_ocp::OcpError> {
    let mut x = it.x[0].clone();
    let mut out = Vec::with_capacity(it.grid.intervals());
    for k in 0..it.grid.intervals() {
        let (t0, t1) = (it.grid.t(k), it.grid.t(k + 1));
        let input = |s: f64| match scheme {
            Scheme::Zoh => it.u[k].clone(),
            Scheme::Foh => &it.u[k] * (1.0 - s) + &it.u[k + 1] * s,
        };
        let mut dense = DenseInterval { t: vec![t0], x: vec![x.iter().copied().collect()] };
        for j in 0..substeps {
            let (sa, sb) = (j as f64 / substeps as f64, (j + 1) as f64 / substeps as f64);
            let (ta, tb) = (t0 + (t1 - t0) * sa, if j + 1 == substeps { t1 } else { t0 + (t1 - t0) * sb });
            x = flow_map(ocp, &x, &input(sa), &input(sb), &it.p, scheme, ta, tb)?.last().clone();
            dense.t.push(tb);
            dense.x.push(x.iter().copied().collect());
        }
        out.push(dense);
    }
    Ok(out)
}

fn convex_violation(ocp: &dyn Ocp, it: &TrajectoryIterate) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..it.len() {
        for c in ocp.state_constraints(k).iter().chain(&ocp.input_constraints(k)) {
            worst = worst.max(c.violation(&it.x[k], &it.u[k], &it.p));
        }
    }
    worst
}

fn boundary_residual(ocp: &dyn Ocp, it: &TrajectoryIterate) -> f64 {
    let xn = it.x.last().expect("nonempty iterate");
    ocp.initial(&it.x[0], &it.p).amax().max(ocp.terminal(xn, &it.p).amax())
}

fn check_shape(ocp: &dyn Ocp, it: &TrajectoryIterate) -> anyhow::Result<()> {
    let d = ocp.dims();
    let ok = it.x.iter().all(|x| x.len() == d.n) && it.u.iter().all(|u| u.len() == d.m) && it.p.len() == d.d;
    anyhow::ensure!(ok, "trajectory does not match the problem dimensions (n = {}, m = {}, d = {})", d.n, d.m, d.d);
    Ok(())
}

/// Generic checks for any problem: scaled defects and open-loop deviation,
/// nodal convex and boundary residuals. `path` maps a state to its worst
/// path constraint value.
fn verify_ocp(
    ocp: &dyn Ocp,
    it: &TrajectoryIterate,
    scheme: Scheme,
    path: &dyn Fn(&Vector) -> f64,
    lcvx_gap: Option<f64>,
) -> anyhow::Result<Verification> {
    check_shape(ocp, it)?;
    let sx = make_scaling(&ocp.scaling_bounds())?.sx;
    let mut errors = Vec::new();
    let max_defect = match defects(ocp, it, scheme) {
        Ok(p) => Some(p.max_scaled_defect(&sx)),
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    };
    let dense = match open_loop(ocp, it, scheme, DENSE_SUBSTEPS) {
        Ok(d) => d,
        Err(e) => {
            errors.push(e.to_string());
            Vec::new()
        }
    };
    let mut node_deviation = Vec::new();
    if !dense.is_empty() {
        node_deviation.push(0.0);
        for (k, d) in dense.iter().enumerate() {
            let end = Vector::from_column_slice(d.x.last().expect("interval end"));
            node_deviation.push((end - &it.x[k + 1]).component_div(&sx).amax());
        }
    }
    let dense_path_value = fold_max(dense.iter().flat_map(|d| d.x.iter()).map(|x| path(&Vector::from_column_slice(x))));
    let dense_path_value = Some(dense_path_value).filter(|v| v.is_finite());
    let node_path_value = Some(fold_max(it.x.iter().map(path))).filter(|v| v.is_finite());
    Ok(Verification {
        checks: Checks {
            max_defect,
            max_node_deviation: (!node_deviation.is_empty()).then(|| node_deviation.iter().copied().fold(0.0, f64::max)),
            node_deviation,
            lcvx_gap,
            max_constraint_violation: convex_violation(ocp, it).max(node_path_value.unwrap_or(0.0)),
            node_path_value,
            dense_path_value,
            boundary_residual: boundary_residual(ocp, it),
            units: "scaled".into(),
            propagation_error: (!errors.is_empty()).then(|| errors.join("; ")),
        },
        dense,
    })
}

/// Integrates the vehicle dynamics with the discretized control and reports
/// per-node deviation, defects and dense path-constraint values.
pub fn propagate_and_verify(vehicle: &Vehicle, it: &TrajectoryIterate, scheme: Scheme) -> anyhow::Result<Verification> {
    if let Vehicle::Freeflyer(f) = vehicle {
        f.check_iterate(it)?;
    }
    verify_ocp(vehicle.ocp(), it, scheme, &|x| vehicle.path_value(x), vehicle.lcvx_gap(it))
}

/// The friction double integrator on normalized time with `p = t_f`, used to
/// verify toy solutions with the same machinery as the vehicles.
pub struct ToyOcp(pub ToyParams);

impl Ocp for ToyOcp {
    fn dims(&self) -> Dims {
        Dims { n: 2, m: 2, d: 1, n_s: 0, n_ic: 2, n_tc: 2 }
    }

    fn dynamics(&self, _t: f64, x: &Vector, u: &Vector, p: &Vector) -> Vector {
        dvector![x[1], u[0] - self.0.g] * p[0]
    }

    fn dynamics_jacobians(&self, _t: f64, x: &Vector, u: &Vector, p: &Vector) -> (Matrix, Matrix, Matrix) {
        let a = Matrix::from_row_slice(2, 2, &[0.0, p[0], 0.0, 0.0]);
        let b = Matrix::from_row_slice(2, 2, &[0.0, 0.0, p[0], 0.0]);
        let f = Matrix::from_column_slice(2, 1, &[x[1], u[0] - self.0.g]);
        (a, b, f)
    }

    fn initial(&self, x: &Vector, _p: &Vector) -> Vector {
        x.clone()
    }

    fn initial_jacobians(&self, _x: &Vector, _p: &Vector) -> (Matrix, Matrix) {
        (Matrix::identity(2, 2), Matrix::zeros(2, 1))
    }

    fn terminal(&self, x: &Vector, _p: &Vector) -> Vector {
        dvector![x[0] - self.0.s, x[1]]
    }

    fn terminal_jacobians(&self, _x: &Vector, _p: &Vector) -> (Matrix, Matrix) {
        (Matrix::identity(2, 2), Matrix::zeros(2, 1))
    }

    fn input_constraints(&self, _k: usize) -> Vec<ConvexConstraint> {
        let sigma = || AffineForm::var(Var::U(1));
        vec![
            ConvexConstraint::NonNeg(sigma().plus_constant(-self.0.u_min)),
            ConvexConstraint::NonNeg(AffineForm::term(Var::U(1), -1.0).plus_constant(self.0.u_max)),
            ConvexConstraint::NonNeg(sigma().plus(Var::U(0), -1.0)),
            ConvexConstraint::NonNeg(sigma().plus(Var::U(0), 1.0)),
        ]
    }

    fn scaling_bounds(&self) -> Bounds {
        let v = (self.0.s / self.0.tf).abs().max(1.0) * 2.0;
        Bounds {
            x: vec![(0.0, self.0.s.abs().max(1.0)), (-v, v)],
            u: vec![(-self.0.u_max, self.0.u_max), (0.0, self.0.u_max)],
            p: vec![(self.0.tf.min(1.0), self.0.tf.max(1.0))],
        }
    }
}

/// Checks a toy trajectory `x = (x₁, x₂)`, `u = (u, σ)`, `p = (t_f)`. The
/// equality gap skips the first node, where the relaxation may be lossy.
pub fn verify_toy(params: &ToyParams, it: &TrajectoryIterate) -> anyhow::Result<Verification> {
    let ocp = ToyOcp(ToyParams { tf: it.p.get(0).copied().unwrap_or(params.tf), ..*params });
    check_shape(&ocp, it)?;
    let gap = it.u.iter().skip(1).map(|u| (u[1] - u[0].abs()) / params.u_max).fold(0.0, f64::max);
    verify_ocp(&ocp, it, Scheme::Foh, &|_| f64::NEG_INFINITY, Some(gap))
}

/// Checks a descent trajectory `x = (r, v, z)`, `u = (u, ξ)`, `p = (t_f)`
/// against the relaxation it was solved on and the open-loop propagation of
/// its ZOH acceleration command. Deviations are in metres.
pub fn verify_pdg(params: &PdgParams, it: &TrajectoryIterate) -> anyhow::Result<Verification> {
    anyhow::ensure!(
        it.x.iter().all(|x| x.len() == 7) && it.u.iter().all(|u| u.len() == 4) && it.p.len() == 1,
        "descent trajectory needs 7 states, 4 inputs and the final time"
    );
    let tf = it.p[0];
    let built = build_pdg(params, tf)?;
    anyhow::ensure!(built.t.len() == it.len(), "final time {tf} implies {} nodes, trajectory has {}", built.t.len(), it.len());
    let tri = |v: &Vector, at: usize| [v[at], v[at + 1], v[at + 2]];
    let r: Vec<[f64; 3]> = it.x.iter().map(|x| tri(x, 0)).collect();
    let v: Vec<[f64; 3]> = it.x.iter().map(|x| tri(x, 3)).collect();
    let mass: Vec<f64> = it.x.iter().map(|x| x[6].exp()).collect();
    let u: Vec<[f64; 3]> = it.u.iter().map(|u| tri(u, 0)).collect();

    let cot = 1.0 / params.gamma_gs.tan();
    let glideslope = |r: &[f64]| fold_max([cot * r[0].abs() - r[2], cot * r[1].abs() - r[2]].into_iter());
    let r_scale = Vector3::from(params.r0).norm().max(1.0);
    let mut worst: f64 = 0.0;
    for k in 0..it.len() {
        let (x, uk) = (&it.x[k], &it.u[k]);
        let (a, xi) = (Vector3::new(uk[0], uk[1], uk[2]), uk[3]);
        let dz = x[6] - built.z0[k];
        let mu = built.mu_max[k];
        worst = worst
            .max((a.norm() - xi) / mu)
            .max((xi * params.gamma_p.cos() - a.z) / mu)
            .max((built.mu_min[k] * (1.0 - dz + dz * dz / 2.0) - xi) / mu)
            .max((xi - mu * (1.0 - dz)) / mu)
            .max(-dz)
            .max(x[6] - built.zmax[k])
            .max((Vector3::new(x[3], x[4], x[5]).norm() - params.v_max) / params.v_max)
            .max(glideslope(&r[k]) / r_scale);
    }
    worst = worst.max(params.m_dry.ln() - it.x[it.len() - 1][6]);
    let xn = &it.x[it.len() - 1];
    let boundary = (0..3)
        .map(|i| {
            let start = (it.x[0][i] - params.r0[i]).abs().max((it.x[0][i + 3] - params.v0[i]).abs());
            start.max(xn[i].abs()).max(xn[i + 3].abs())
        })
        .fold((it.x[0][6] - params.m_wet.ln()).abs(), f64::max);
    let gap = it.u.iter().map(|u| u[3] - Vector3::new(u[0], u[1], u[2]).norm()).fold(0.0, f64::max);

    let nodes = PdgNodes { t: &built.t, r: &r, v: &v, mass: &mass, u: &u };
    let (checks_prop, dense) = match propagate_pdg_nodes(params, &nodes) {
        Ok(p) => {
            // split the dense samples back into intervals on node times
            let mut dense = Vec::new();
            let mut current = DenseInterval { t: Vec::new(), x: Vec::new() };
            for (t, y) in p.t_dense.iter().zip(&p.x_dense) {
                let mut state = y[..6].to_vec();
                state.push(y[6].ln());
                current.t.push(t / tf);
                current.x.push(state);
                if current.t.len() > 1 && built.t.iter().any(|tk| (tk - t).abs() < 1e-9) {
                    let next = DenseInterval { t: vec![t / tf], x: vec![current.x.last().unwrap().clone()] };
                    dense.push(std::mem::replace(&mut current, next));
                }
            }
            let path = fold_max(p.x_dense.iter().map(|y| glideslope(&y[..3])));
            (Ok((p.node_position_error, p.max_position_error, path)), dense)
        }
        Err(e) => (Err(e.to_string()), Vec::new()),
    };
    let node_path_value = Some(fold_max(r.iter().map(|rk| glideslope(rk))));
    let (node_deviation, max_defect, dense_path_value, propagation_error) = match checks_prop {
        Ok((dev, max, path)) => (dev, Some(max), Some(path), None),
        Err(e) => (Vec::new(), None, None, Some(e)),
    };
    Ok(Verification {
        checks: Checks {
            max_defect,
            max_node_deviation: max_defect,
            node_deviation,
            lcvx_gap: Some(gap / (params.rho_max / params.m_wet)),
            max_constraint_violation: worst,
            node_path_value,
            dense_path_value,
            boundary_residual: boundary,
            units: "si".into(),
            propagation_error,
        },
        dense,
    })
}
