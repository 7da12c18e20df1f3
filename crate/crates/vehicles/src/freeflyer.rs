//! 6-DoF free-flyer inside a union of box rooms. State
//! `x = (r, v, q, ω)` with `q` the body-from-inertial quaternion, input
//! `u = (T, M)`, parameter `p = (t_f, χ)` where `χ` stacks the slack room
//! SDFs node by node, `χ[1 + k·n_rooms + i] ≤ d_i(r_k)`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use trajopt_ocp::{
    AffineForm, Bounds, ConvexConstraint, Dims, Matrix, Ocp, TimeGrid, TrajectoryIterate, Var, Vector,
};

use crate::geometry::{room_sdf, softmax, softmax_gradient, Ellipsoid, Room};
use crate::quat::{kinematics, kinematics_jacobians, quat_conj, quat_exp_map, quat_mul, slerp, Quat};
use crate::VehicleError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeFlyerParams {
    pub mass: f64,
    /// Row-major principal inertia.
    pub inertia: [[f64; 3]; 3],
    pub t_max: f64,
    pub m_max: f64,
    pub v_max: f64,
    pub w_max: f64,
    pub tf_min: f64,
    pub tf_max: f64,
    pub rooms: Vec<Room>,
    pub obstacles: Vec<Ellipsoid>,
    /// Softmax sharpness.
    pub sharpness: f64,
    /// Weight of the terminal cost `−ε Σ χ` that keeps the slacks tight.
    pub eps_iss: f64,
    pub r0: [f64; 3],
    pub v0: [f64; 3],
    pub q0: [f64; 4],
    pub rf: [f64; 3],
    pub vf: [f64; 3],
    pub qf: [f64; 4],
}

/// Bundled default parameters as JSON.
pub const FREEFLYER_FIXTURE: &str = include_str!("../fixtures/freeflyer.json");

impl Default for FreeFlyerParams {
    fn default() -> Self {
        serde_json::from_str(FREEFLYER_FIXTURE).expect("bundled free-flyer fixture")
    }
}

impl FreeFlyerParams {
    /// Defaults with the keys of `overrides` replaced (objects merge
    /// recursively). Unknown keys are rejected.
    pub fn with_overrides(overrides: &serde_json::Value) -> Result<Self, VehicleError> {
        let mut base: serde_json::Value = serde_json::from_str(FREEFLYER_FIXTURE)?;
        crate::merge_json(&mut base, overrides);
        Ok(serde_json::from_value(base)?)
    }

    pub fn inertia_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.inertia[i][j])
    }

    pub fn validate(&self) -> Result<(), VehicleError> {
        let bad = |m: String| Err(VehicleError::Params(m));
        let j = self.inertia_matrix();
        if (j - j.transpose()).amax() > 1e-12 * j.amax().max(1.0) || j.cholesky().is_none() {
            return bad("inertia must be symmetric positive definite".into());
        }
        for (name, v) in [
            ("mass", self.mass),
            ("t_max", self.t_max),
            ("m_max", self.m_max),
            ("v_max", self.v_max),
            ("w_max", self.w_max),
            ("sharpness", self.sharpness),
            ("tf_min", self.tf_min),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.tf_min <= self.tf_max) || !(self.eps_iss >= 0.0) {
            return bad("need tf_min <= tf_max and eps_iss >= 0".into());
        }
        if self.rooms.is_empty() {
            return bad("at least one room is required".into());
        }
        for (name, q) in [("q0", self.q0), ("qf", self.qf)] {
            let n = Quat::from(q).norm();
            if (n - 1.0).abs() > 1e-9 {
                return bad(format!("{name} has norm {n}"));
            }
        }
        self.rooms.iter().try_for_each(Room::validate)?;
        self.obstacles.iter().try_for_each(Ellipsoid::validate)
    }

    /// Exact flight-space SDF `max_i d_i(r)`.
    pub fn sdf(&self, r: &Vector3<f64>) -> f64 {
        self.rooms.iter().map(|room| room_sdf(r, room)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Softmax of the exact room SDFs.
    pub fn smooth_sdf(&self, r: &Vector3<f64>) -> f64 {
        let d: Vec<f64> = self.rooms.iter().map(|room| room_sdf(r, room)).collect();
        softmax(&d, self.sharpness)
    }
}

#[derive(Debug, Clone)]
pub struct FreeFlyer {
    pub params: FreeFlyerParams,
    /// Grid size the slack SDF block of `p` is laid out for.
    pub nodes: usize,
    j: Matrix3<f64>,
    j_inv: Matrix3<f64>,
}

fn seg(x: &Vector, at: usize) -> Vector3<f64> {
    Vector3::new(x[at], x[at + 1], x[at + 2])
}

fn quat_of(x: &Vector) -> Quat {
    Quat::new(x[6], x[7], x[8], x[9])
}

impl FreeFlyer {
    pub fn new(params: FreeFlyerParams, grid: TimeGrid) -> Result<Self, VehicleError> {
        params.validate()?;
        let j = params.inertia_matrix();
        let j_inv = j.try_inverse().ok_or_else(|| VehicleError::Params("singular inertia".into()))?;
        Ok(Self { params, nodes: grid.len(), j, j_inv })
    }

    pub fn rooms(&self) -> usize {
        self.params.rooms.len()
    }

    /// Index of `χ_ik` in `p`.
    pub fn slack_index(&self, k: usize, i: usize) -> usize {
        1 + k * self.rooms() + i
    }

    /// Fails when an iterate's parameter does not match the slack layout.
    pub fn check_iterate(&self, it: &TrajectoryIterate) -> Result<(), VehicleError> {
        let d = 1 + self.nodes * self.rooms();
        if it.p.len() != d || it.len() != self.nodes {
            return Err(VehicleError::Params(format!(
                "iterate has {} nodes and {} parameters, expected {} and {d}",
                it.len(),
                it.p.len(),
                self.nodes
            )));
        }
        Ok(())
    }

    fn f_abs(&self, x: &Vector, u: &Vector) -> Vector {
        let (v, w) = (seg(x, 3), seg(x, 10));
        let acc = seg(u, 0) / self.params.mass;
        let qdot = kinematics(&quat_of(x), &w);
        let wdot = self.j_inv * (seg(u, 3) - w.cross(&(self.j * w)));
        let mut f = Vector::zeros(13);
        f.rows_mut(0, 3).copy_from(&v);
        f.rows_mut(3, 3).copy_from(&acc);
        f.rows_mut(6, 4).copy_from(&qdot);
        f.rows_mut(10, 3).copy_from(&wdot);
        f
    }

    fn slacks(&self, k: usize, p: &Vector) -> Vec<f64> {
        (0..self.rooms()).map(|i| p[self.slack_index(k, i)]).collect()
    }

    fn boundary(x: &Vector, r: &[f64; 3], v: &[f64; 3], q: &[f64; 4]) -> Vector {
        let target: Vec<f64> = r.iter().chain(v).chain(q).copied().chain([0.0; 3]).collect();
        x - Vector::from_vec(target)
    }

    /// Room SDFs `d_i(r_k)` of every room at every node of `it`.
    pub fn exact_slacks(&self, it: &TrajectoryIterate) -> Vec<Vec<f64>> {
        it.x
            .iter()
            .map(|x| self.params.rooms.iter().map(|room| room_sdf(&seg(x, 0), room)).collect())
            .collect()
    }
}

impl Ocp for FreeFlyer {
    fn dims(&self) -> Dims {
        Dims {
            n: 13,
            m: 6,
            d: 1 + self.nodes * self.rooms(),
            n_s: self.params.obstacles.len() + 1,
            n_ic: 13,
            n_tc: 13,
        }
    }

    fn dynamics(&self, _t: f64, x: &Vector, u: &Vector, p: &Vector) -> Vector {
        self.f_abs(x, u) * p[0]
    }

    fn dynamics_jacobians(&self, _t: f64, x: &Vector, u: &Vector, p: &Vector) -> (Matrix, Matrix, Matrix) {
        let w = seg(x, 10);
        let mut a = Matrix::zeros(13, 13);
        a.view_mut((0, 3), (3, 3)).fill_with_identity();
        let (dq, dw) = kinematics_jacobians(&quat_of(x), &w);
        a.view_mut((6, 6), (4, 4)).copy_from(&dq);
        a.view_mut((6, 10), (4, 3)).copy_from(&dw);
        // ∂(ω × Jω)/∂ω = [ω]× J − [Jω]×
        let gyro = w.cross_matrix() * self.j - (self.j * w).cross_matrix();
        a.view_mut((10, 10), (3, 3)).copy_from(&(-self.j_inv * gyro));
        let mut b = Matrix::zeros(13, 6);
        b.view_mut((3, 0), (3, 3)).copy_from(&(Matrix3::identity() / self.params.mass));
        b.view_mut((10, 3), (3, 3)).copy_from(&self.j_inv);
        let mut f = Matrix::zeros(13, p.len());
        f.set_column(0, &self.f_abs(x, u));
        (a * p[0], b * p[0], f)
    }

    fn dynamics_params(&self) -> Vec<usize> {
        vec![0]
    }

    fn path(&self, k: usize, x: &Vector, _u: &Vector, p: &Vector) -> Vector {
        let r = seg(x, 0);
        let mut s: Vec<f64> = self.params.obstacles.iter().map(|o| o.value(&r)).collect();
        s.push(-softmax(&self.slacks(k, p), self.params.sharpness));
        Vector::from_vec(s)
    }

    fn path_jacobians(&self, k: usize, x: &Vector, _u: &Vector, p: &Vector) -> (Matrix, Matrix, Matrix) {
        let r = seg(x, 0);
        let n_obs = self.params.obstacles.len();
        let mut c = Matrix::zeros(n_obs + 1, 13);
        for (j, o) in self.params.obstacles.iter().enumerate() {
            c.view_mut((j, 0), (1, 3)).copy_from(&o.gradient(&r).transpose());
        }
        let mut g = Matrix::zeros(n_obs + 1, p.len());
        for (i, gi) in softmax_gradient(&self.slacks(k, p), self.params.sharpness).into_iter().enumerate() {
            g[(n_obs, self.slack_index(k, i))] = -gi;
        }
        (c, Matrix::zeros(n_obs + 1, 6), g)
    }

    fn initial(&self, x: &Vector, _p: &Vector) -> Vector {
        Self::boundary(x, &self.params.r0, &self.params.v0, &self.params.q0)
    }

    fn initial_jacobians(&self, _x: &Vector, p: &Vector) -> (Matrix, Matrix) {
        (Matrix::identity(13, 13), Matrix::zeros(13, p.len()))
    }

    fn terminal(&self, x: &Vector, _p: &Vector) -> Vector {
        Self::boundary(x, &self.params.rf, &self.params.vf, &self.params.qf)
    }

    fn terminal_jacobians(&self, _x: &Vector, p: &Vector) -> (Matrix, Matrix) {
        (Matrix::identity(13, 13), Matrix::zeros(13, p.len()))
    }

    fn terminal_cost(&self) -> (Vector, Vector) {
        let d = self.dims().d;
        let mut cp = Vector::from_element(d, -self.params.eps_iss);
        cp[0] = 0.0;
        (Vector::zeros(13), cp)
    }

    fn cost_weight(&self) -> Matrix {
        let (t, m) = (self.params.t_max, self.params.m_max);
        Matrix::from_diagonal(&Vector::from_fn(6, |i, _| if i < 3 { 1.0 / (t * t) } else { 1.0 / (m * m) }))
    }

    fn state_constraints(&self, k: usize) -> Vec<ConvexConstraint> {
        let p = &self.params;
        let norm_bound = |at: usize, bound: f64| ConvexConstraint::Soc {
            bound: AffineForm::constant(bound),
            vector: (at..at + 3).map(|i| AffineForm::var(Var::X(i))).collect(),
        };
        let mut out = vec![
            norm_bound(3, p.v_max),
            norm_bound(10, p.w_max),
            ConvexConstraint::NonNeg(AffineForm::var(Var::P(0)).plus_constant(-p.tf_min)),
            ConvexConstraint::NonNeg(AffineForm::term(Var::P(0), -1.0).plus_constant(p.tf_max)),
        ];
        // χ_ik ≤ 1 − |r_j − c_j| / s_j for every axis j
        for (i, room) in p.rooms.iter().enumerate() {
            let (c, s) = (room.centroid(), room.diagonal());
            let chi = Var::P(self.slack_index(k, i));
            for j in 0..3 {
                for sign in [1.0, -1.0] {
                    out.push(ConvexConstraint::NonNeg(
                        AffineForm::term(chi, -1.0)
                            .plus(Var::X(j), -sign / s[j])
                            .plus_constant(1.0 + sign * c[j] / s[j]),
                    ));
                }
            }
        }
        out
    }

    fn input_constraints(&self, _k: usize) -> Vec<ConvexConstraint> {
        let norm_bound = |at: usize, bound: f64| ConvexConstraint::Soc {
            bound: AffineForm::constant(bound),
            vector: (at..at + 3).map(|i| AffineForm::var(Var::U(i))).collect(),
        };
        vec![norm_bound(0, self.params.t_max), norm_bound(3, self.params.m_max)]
    }

    fn control_affine(&self, _t: f64, x: &Vector, p: &Vector) -> Option<(Vector, Matrix)> {
        let w = seg(x, 10);
        let mut f0 = Vector::zeros(13);
        f0.rows_mut(0, 3).copy_from(&seg(x, 3));
        f0.rows_mut(6, 4).copy_from(&kinematics(&quat_of(x), &w));
        f0.rows_mut(10, 3).copy_from(&(-self.j_inv * w.cross(&(self.j * w))));
        let mut b = Matrix::zeros(13, 6);
        b.view_mut((3, 0), (3, 3)).copy_from(&(Matrix3::identity() / self.params.mass));
        b.view_mut((10, 3), (3, 3)).copy_from(&self.j_inv);
        Some((f0 * p[0], b * p[0]))
    }

    fn scaling_bounds(&self) -> Bounds {
        let p = &self.params;
        let mut lo = Vector3::from_element(f64::INFINITY);
        let mut hi = Vector3::from_element(f64::NEG_INFINITY);
        for room in &p.rooms {
            lo = lo.inf(&Vector3::from(room.lower));
            hi = hi.sup(&Vector3::from(room.upper));
        }
        // most negative room SDF anywhere in the layout's bounding box
        let worst = p
            .rooms
            .iter()
            .map(|room| {
                let s = room.diagonal();
                let c = room.centroid();
                (0..3).map(|j| (hi[j] - c[j]).max(c[j] - lo[j]) / s[j]).fold(0.0, f64::max)
            })
            .fold(1.0, f64::max);
        let mut x: Vec<(f64, f64)> = (0..3).map(|j| (lo[j], hi[j])).collect();
        x.extend([(-p.v_max, p.v_max); 3]);
        x.extend([(-1.0, 1.0); 4]);
        x.extend([(-p.w_max, p.w_max); 3]);
        let mut u = vec![(-p.t_max, p.t_max); 3];
        u.extend([(-p.m_max, p.m_max); 3]);
        let mut pb = vec![(p.tf_min, p.tf_max)];
        pb.extend(std::iter::repeat_n((1.0 - worst, 1.0), self.nodes * self.rooms()));
        Bounds { x, u, p: pb }
    }
}

/// L-shaped constant-speed position guess (axis 1, then 2, then 3), SLERP
/// attitude with the matching constant body rate, zero inputs, midpoint final
/// time, and slack SDFs equal to the room SDFs along the path.
pub fn freeflyer_guess(ff: &FreeFlyer, grid: TimeGrid) -> Result<TrajectoryIterate, VehicleError> {
    let p = &ff.params;
    if grid.len() != ff.nodes {
        return Err(VehicleError::Params(format!("grid has {} nodes, problem expects {}", grid.len(), ff.nodes)));
    }
    let tf = (p.tf_min + p.tf_max) / 2.0;
    let (r0, rf) = (Vector3::from(p.r0), Vector3::from(p.rf));
    let gap = rf - r0;
    let total = gap.abs().sum();
    let (q0, qf) = (Quat::from(p.q0), Quat::from(p.qf));
    let (angle, axis) = quat_exp_map(&quat_mul(&quat_conj(&q0), &qf));
    let w = axis * (angle / tf);

    let mut xs = Vec::with_capacity(grid.len());
    for t in grid.times() {
        // walk the legs in order; velocity follows the leg currently travelled
        let mut r = r0;
        let mut v = Vector3::zeros();
        let mut left = t * total;
        for j in 0..3 {
            let leg = gap[j].abs();
            if leg == 0.0 {
                continue;
            }
            let step = left.min(leg);
            r[j] += gap[j].signum() * step;
            left -= step;
            if v == Vector3::zeros() && (left > 0.0 || step < leg) {
                v[j] = gap[j].signum() * total / tf;
            }
        }
        if total > 0.0 && v == Vector3::zeros() {
            // final node: keep the last leg's direction
            let j = (0..3).rev().find(|&j| gap[j] != 0.0).expect("nonzero gap");
            v[j] = gap[j].signum() * total / tf;
        }
        let q = slerp(&q0, &qf, t);
        let mut x = Vector::zeros(13);
        x.rows_mut(0, 3).copy_from(&r);
        x.rows_mut(3, 3).copy_from(&v);
        x.rows_mut(6, 4).copy_from(&q);
        x.rows_mut(10, 3).copy_from(&w);
        xs.push(x);
    }
    let mut param = Vector::zeros(1 + grid.len() * ff.rooms());
    param[0] = tf;
    for (k, x) in xs.iter().enumerate() {
        for (i, room) in p.rooms.iter().enumerate() {
            param[ff.slack_index(k, i)] = room_sdf(&seg(x, 0), room);
        }
    }
    let us = vec![Vector::zeros(6); grid.len()];
    Ok(TrajectoryIterate::new(grid, xs, us, param)?)
}
