use nalgebra::DMatrixView;
use ode_solvers::dop_shared::{IntegrationError, OutputType, System};
use ode_solvers::Dopri5;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::iterate::TrajectoryIterate;
use crate::problem::Ocp;
use crate::{Matrix, OcpError, Vector};

pub const RTOL: f64 = 1e-10;
pub const ATOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Zoh,
    Foh,
}

/// Discrete update `x_{k+1} = A x_k + B⁻ u_k + B⁺ u_{k+1} + F p + r + E ν_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub a: Matrix,
    pub b_minus: Matrix,
    /// zero under ZOH
    pub b_plus: Matrix,
    pub f: Matrix,
    pub r: Vector,
    pub e: Matrix,
}

/// `s(x, u, p) ≈ C x + D u + G p + r′` at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeLinearization {
    pub c: Matrix,
    pub d: Matrix,
    pub g: Matrix,
    pub r_prime: Vector,
}

/// `g(x, p) ≈ H x + K p + ℓ` for a boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    pub h: Matrix,
    pub k: Matrix,
    pub l: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSegmentSet {
    pub scheme: Scheme,
    pub segments: Vec<Segment>,
    pub nodes: Vec<NodeLinearization>,
    pub initial: Boundary,
    pub terminal: Boundary,
}

/// Accepted integrator steps over one interval, endpoints included.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowSamples {
    pub t: Vec<f64>,
    pub x: Vec<Vector>,
}

impl FlowSamples {
    pub fn last(&self) -> &Vector {
        self.x.last().expect("integration records the final state")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    /// one per interval, each restarted from the iterate's node state
    pub samples: Vec<FlowSamples>,
    /// `Δ_k = x_{k+1} − ψ(t_k, t_{k+1}, x_k, u, p)`
    pub defects: Vec<Vector>,
    pub max_defect: f64,
}

impl PropagationResult {
    /// Largest defect entry after dividing by the state scale.
    pub fn max_scaled_defect(&self, sx: &Vector) -> f64 {
        self.defects.iter().map(|d| d.component_div(sx).amax()).fold(0.0, f64::max)
    }
}

struct Rhs<'a, F: Fn(f64, &Vector, &mut Vector)> {
    f: &'a F,
}

impl<F: Fn(f64, &Vector, &mut Vector)> System<f64, Vector> for Rhs<'_, F> {
    fn system(&self, t: f64, y: &Vector, dy: &mut Vector) {
        (self.f)(t, y, dy)
    }
}

fn integrate<F>(f: &F, t0: f64, t1: f64, y0: Vector) -> Result<FlowSamples, OcpError>
where
    F: Fn(f64, &Vector, &mut Vector),
{
    if t1 == t0 {
        return Ok(FlowSamples { t: vec![t0], x: vec![y0] });
    }
    let mut solver = Dopri5::new(Rhs { f }, t0, t1, t1 - t0, y0, RTOL, ATOL);
    solver.set_output(OutputType::Sparse);
    solver.integrate().map_err(|e| {
        let t = match e {
            IntegrationError::MaxNumStepReached { x, .. }
            | IntegrationError::StepSizeUnderflow { x }
            | IntegrationError::StiffnessDetected { x } => x,
        };
        OcpError::Integration { t, reason: e.to_string() }
    })?;
    let (t, x) = solver.results().get();
    if x.iter().any(|v| v.iter().any(|e| !e.is_finite())) {
        return Err(OcpError::Integration { t: t1, reason: "non-finite state".into() });
    }
    Ok(FlowSamples { t: t.clone(), x: x.clone() })
}

/// Input held over `[t0, t1]`: constant `u0` under ZOH, linear from `u0` to
/// `u1` under FOH.
fn input_at(scheme: Scheme, t0: f64, t1: f64, u0: &Vector, u1: &Vector, t: f64) -> (Vector, f64, f64) {
    match scheme {
        Scheme::Zoh => (u0.clone(), 1.0, 0.0),
        Scheme::Foh => {
            let lp = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            let lm = 1.0 - lp;
            (u0 * lm + u1 * lp, lm, lp)
        }
    }
}

/// Integrates `ẋ = f(t, x, u(t), p)` from `x0` over `[t0, t1]`.
#[allow(clippy::too_many_arguments)]
pub fn flow_map(
    ocp: &dyn Ocp,
    x0: &Vector,
    u0: &Vector,
    u1: &Vector,
    p: &Vector,
    scheme: Scheme,
    t0: f64,
    t1: f64,
) -> Result<FlowSamples, OcpError> {
    let rhs = |t: f64, y: &Vector, dy: &mut Vector| {
        let (u, _, _) = input_at(scheme, t0, t1, u0, u1, t);
        dy.copy_from(&ocp.dynamics(t, y, &u, p));
    };
    integrate(&rhs, t0, t1, x0.clone())
}

fn view(y: &Vector, off: usize, r: usize, c: usize) -> DMatrixView<'_, f64> {
    DMatrixView::from_slice(&y.as_slice()[off..off + r * c], r, c)
}

fn put(dy: &mut Vector, off: usize, m: &[f64]) {
    dy.as_mut_slice()[off..off + m.len()].copy_from_slice(m);
}

fn check_finite(m: &Matrix, node: usize, name: &'static str) -> Result<(), OcpError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(OcpError::NonFinite { node, matrix: name })
    }
}

fn discretize_interval(
    ocp: &dyn Ocp,
    reference: &TrajectoryIterate,
    scheme: Scheme,
    k: usize,
    params: &[usize],
    e_c: &Matrix,
) -> Result<Segment, OcpError> {
    let dims = ocp.dims();
    let (n, m, d) = (dims.n, dims.m, dims.d);
    let np = params.len();
    let nv = e_c.ncols();
    let (t0, t1) = (reference.grid.t(k), reference.grid.t(k + 1));
    let (u0, u1, p) = (&reference.u[k], &reference.u[k + 1], &reference.p);
    let foh = scheme == Scheme::Foh;

    let o_phi = n;
    let o_bm = o_phi + n * n;
    let o_bp = o_bm + n * m;
    let o_f = o_bp + if foh { n * m } else { 0 };
    let o_r = o_f + n * np;
    let o_e = o_r + n;
    let len = o_e + n * nv;

    let rhs = |t: f64, y: &Vector, dy: &mut Vector| {
        let x = y.rows(0, n).into_owned();
        let (u, lm, lp) = input_at(scheme, t0, t1, u0, u1, t);
        let fx = ocp.dynamics(t, &x, &u, p);
        let (a, b, fc) = ocp.dynamics_jacobians(t, &x, &u, p);
        dy.rows_mut(0, n).copy_from(&fx);
        put(dy, o_phi, (&a * view(y, o_phi, n, n)).as_slice());
        put(dy, o_bm, (&a * view(y, o_bm, n, m) + &b * lm).as_slice());
        if foh {
            put(dy, o_bp, (&a * view(y, o_bp, n, m) + &b * lp).as_slice());
        }
        let mut fsel = Matrix::zeros(n, np);
        for (j, &c) in params.iter().enumerate() {
            fsel.set_column(j, &fc.column(c));
        }
        put(dy, o_f, (&a * view(y, o_f, n, np) + &fsel).as_slice());
        let offset = &fx - &a * &x - &b * &u - &fc * p;
        put(dy, o_r, (&a * view(y, o_r, n, 1) + offset).as_slice());
        put(dy, o_e, (&a * view(y, o_e, n, nv) + e_c).as_slice());
    };

    let mut y0 = Vector::zeros(len);
    y0.rows_mut(0, n).copy_from(&reference.x[k]);
    put(&mut y0, o_phi, Matrix::identity(n, n).as_slice());
    let y1 = integrate(&rhs, t0, t1, y0)?.last().clone();

    let a = view(&y1, o_phi, n, n).into_owned();
    let b_minus = view(&y1, o_bm, n, m).into_owned();
    let b_plus = if foh { view(&y1, o_bp, n, m).into_owned() } else { Matrix::zeros(n, m) };
    let fsel = view(&y1, o_f, n, np).into_owned();
    let mut f = Matrix::zeros(n, d);
    for (j, &c) in params.iter().enumerate() {
        f.set_column(c, &fsel.column(j));
    }
    let r = view(&y1, o_r, n, 1).column(0).into_owned();
    let e = view(&y1, o_e, n, nv).into_owned();
    for (mat, name) in [(&a, "A"), (&b_minus, "B-"), (&b_plus, "B+"), (&f, "F"), (&e, "E")] {
        check_finite(mat, k, name)?;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(OcpError::NonFinite { node: k, matrix: "r" });
    }
    Ok(Segment { a, b_minus, b_plus, f, r, e })
}

fn check_reference(ocp: &dyn Ocp, it: &TrajectoryIterate) -> Result<(), OcpError> {
    let d = ocp.dims();
    let ok = it.x.len() == it.grid.len()
        && it.u.len() == it.grid.len()
        && it.x.iter().all(|x| x.len() == d.n)
        && it.u.iter().all(|u| u.len() == d.m)
        && it.p.len() == d.d;
    if ok {
        Ok(())
    } else {
        Err(OcpError::Dimension("iterate does not match problem dimensions".into()))
    }
}

/// Linearizes the problem about `reference` and discretizes the dynamics
/// exactly along the nonlinear flow restarted at each node.
pub fn discretize(ocp: &dyn Ocp, reference: &TrajectoryIterate, scheme: Scheme) -> Result<LinearizedSegmentSet, OcpError> {
    check_reference(ocp, reference)?;
    let params = ocp.dynamics_params();
    let e_c = ocp.virtual_gain();
    let segments = (0..reference.grid.intervals())
        .into_par_iter()
        .map(|k| discretize_interval(ocp, reference, scheme, k, &params, &e_c))
        .collect::<Result<Vec<_>, _>>()?;

    let p = &reference.p;
    let nodes = (0..reference.grid.len())
        .map(|k| {
            let (x, u) = (&reference.x[k], &reference.u[k]);
            let (c, d, g) = ocp.path_jacobians(k, x, u, p);
            for (mat, name) in [(&c, "C"), (&d, "D"), (&g, "G")] {
                check_finite(mat, k, name)?;
            }
            let r_prime = ocp.path(k, x, u, p) - &c * x - &d * u - &g * p;
            Ok(NodeLinearization { c, d, g, r_prime })
        })
        .collect::<Result<Vec<_>, OcpError>>()?;

    let boundary = |x: &Vector, g: Vector, (h, kk): (Matrix, Matrix)| Boundary { l: g - &h * x - &kk * p, h, k: kk };
    let (x0, xn) = (&reference.x[0], reference.x.last().unwrap());
    let initial = boundary(x0, ocp.initial(x0, p), ocp.initial_jacobians(x0, p));
    let terminal = boundary(xn, ocp.terminal(xn, p), ocp.terminal_jacobians(xn, p));
    Ok(LinearizedSegmentSet { scheme, segments, nodes, initial, terminal })
}

/// Propagates every interval from the iterate's own node state and measures
/// the mismatch with the next node.
pub fn defects(ocp: &dyn Ocp, it: &TrajectoryIterate, scheme: Scheme) -> Result<PropagationResult, OcpError> {
    check_reference(ocp, it)?;
    let samples = (0..it.grid.intervals())
        .into_par_iter()
        .map(|k| flow_map(ocp, &it.x[k], &it.u[k], &it.u[k + 1], &it.p, scheme, it.grid.t(k), it.grid.t(k + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    let defects: Vec<Vector> = samples.iter().enumerate().map(|(k, s)| &it.x[k + 1] - s.last()).collect();
    let max_defect = defects.iter().map(|d| d.amax()).fold(0.0, f64::max);
    Ok(PropagationResult { samples, defects, max_defect })
}

/// Largest mismatch between the nonlinear flow from each reference node and
/// the discrete update evaluated at the reference.
pub fn check_consistency(
    segments: &LinearizedSegmentSet,
    ocp: &dyn Ocp,
    reference: &TrajectoryIterate,
) -> Result<f64, OcpError> {
    let prop = defects(ocp, reference, segments.scheme)?;
    let p = &reference.p;
    let mut worst: f64 = 0.0;
    for (k, seg) in segments.segments.iter().enumerate() {
        let lin = &seg.a * &reference.x[k]
            + &seg.b_minus * &reference.u[k]
            + &seg.b_plus * &reference.u[k + 1]
            + &seg.f * p
            + &seg.r;
        worst = worst.max((prop.samples[k].last() - lin).amax());
    }
    Ok(worst)
}
