//! Point-mass quadrotor `r̈ = a − g n̂` with free final time, acceleration
//! magnitude and tilt limits relaxed through the slack `σ`, and ellipsoidal
//! keep-out zones. State `x = (r, ṙ)`, input `u = (a, σ)`, parameter
//! `p = t_f`.

use nalgebra::{dvector, Vector3};
use serde::{Deserialize, Serialize};
use trajopt_ocp::{
    straight_line_guess, AffineForm, Bounds, ConvexConstraint, Dims, Matrix, Ocp, TimeGrid,
    TrajectoryIterate, Var, Vector,
};

use crate::geometry::Ellipsoid;
use crate::VehicleError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadrotorParams {
    pub g: f64,
    pub a_min: f64,
    pub a_max: f64,
    /// Largest angle between `a` and the up direction (rad).
    pub theta_max: f64,
    pub tf_min: f64,
    pub tf_max: f64,
    pub obstacles: Vec<Ellipsoid>,
    pub r0: [f64; 3],
    pub v0: [f64; 3],
    pub rf: [f64; 3],
    pub vf: [f64; 3],
}

/// Bundled default parameters as JSON.
pub const QUADROTOR_FIXTURE: &str = include_str!("../fixtures/quadrotor.json");

impl Default for QuadrotorParams {
    fn default() -> Self {
        serde_json::from_str(QUADROTOR_FIXTURE).expect("bundled quadrotor fixture")
    }
}

impl QuadrotorParams {
    /// Defaults with the keys of `overrides` replaced (objects merge
    /// recursively). Unknown keys are rejected.
    pub fn with_overrides(overrides: &serde_json::Value) -> Result<Self, VehicleError> {
        let mut base: serde_json::Value = serde_json::from_str(QUADROTOR_FIXTURE)?;
        crate::merge_json(&mut base, overrides);
        Ok(serde_json::from_value(base)?)
    }

    pub fn validate(&self) -> Result<(), VehicleError> {
        let bad = |m: String| Err(VehicleError::Params(m));
        if !(0.0 < self.a_min && self.a_min < self.a_max) {
            return bad(format!("need 0 < a_min < a_max, got {} and {}", self.a_min, self.a_max));
        }
        if !(self.theta_max > 0.0 && self.theta_max <= std::f64::consts::PI) {
            return bad(format!("theta_max = {} outside (0, pi]", self.theta_max));
        }
        if !(0.0 < self.tf_min && self.tf_min <= self.tf_max) {
            return bad(format!("need 0 < tf_min <= tf_max, got [{}, {}]", self.tf_min, self.tf_max));
        }
        if !self.g.is_finite() || [self.r0, self.v0, self.rf, self.vf].iter().flatten().any(|v| !v.is_finite()) {
            return bad("non-finite gravity or boundary condition".into());
        }
        self.obstacles.iter().try_for_each(Ellipsoid::validate)
    }
}

/// The quadrotor problem on normalized time with running cost `(σ/g)²`.
#[derive(Debug, Clone)]
pub struct Quadrotor {
    pub params: QuadrotorParams,
}

impl Quadrotor {
    pub fn new(params: QuadrotorParams) -> Result<Self, VehicleError> {
        params.validate()?;
        Ok(Self { params })
    }

    fn f_abs(&self, x: &Vector, u: &Vector) -> Vector {
        dvector![x[3], x[4], x[5], u[0], u[1], u[2] - self.params.g]
    }

    fn boundary(x: &Vector, r: &[f64; 3], v: &[f64; 3]) -> Vector {
        Vector::from_fn(6, |i, _| x[i] - if i < 3 { r[i] } else { v[i - 3] })
    }
}

fn position(x: &Vector) -> Vector3<f64> {
    Vector3::new(x[0], x[1], x[2])
}

impl Ocp for Quadrotor {
    fn dims(&self) -> Dims {
        Dims { n: 6, m: 4, d: 1, n_s: self.params.obstacles.len(), n_ic: 6, n_tc: 6 }
    }

    fn dynamics(&self, _t: f64, x: &Vector, u: &Vector, p: &Vector) -> Vector {
        self.f_abs(x, u) * p[0]
    }

    fn dynamics_jacobians(&self, _t: f64, x: &Vector, u: &Vector, p: &Vector) -> (Matrix, Matrix, Matrix) {
        let mut a = Matrix::zeros(6, 6);
        a.view_mut((0, 3), (3, 3)).fill_with_identity();
        let mut b = Matrix::zeros(6, 4);
        b.view_mut((3, 0), (3, 3)).fill_with_identity();
        let mut f = Matrix::zeros(6, 1);
        f.set_column(0, &self.f_abs(x, u));
        (a * p[0], b * p[0], f)
    }

    fn path(&self, _k: usize, x: &Vector, _u: &Vector, _p: &Vector) -> Vector {
        let r = position(x);
        Vector::from_iterator(self.params.obstacles.len(), self.params.obstacles.iter().map(|o| o.value(&r)))
    }

    fn path_jacobians(&self, _k: usize, x: &Vector, _u: &Vector, _p: &Vector) -> (Matrix, Matrix, Matrix) {
        let r = position(x);
        let n = self.params.obstacles.len();
        let mut c = Matrix::zeros(n, 6);
        for (j, o) in self.params.obstacles.iter().enumerate() {
            let g = o.gradient(&r);
            for i in 0..3 {
                c[(j, i)] = g[i];
            }
        }
        (c, Matrix::zeros(n, 4), Matrix::zeros(n, 1))
    }

    fn initial(&self, x: &Vector, _p: &Vector) -> Vector {
        Self::boundary(x, &self.params.r0, &self.params.v0)
    }

    fn initial_jacobians(&self, _x: &Vector, _p: &Vector) -> (Matrix, Matrix) {
        (Matrix::identity(6, 6), Matrix::zeros(6, 1))
    }

    fn terminal(&self, x: &Vector, _p: &Vector) -> Vector {
        Self::boundary(x, &self.params.rf, &self.params.vf)
    }

    fn terminal_jacobians(&self, _x: &Vector, _p: &Vector) -> (Matrix, Matrix) {
        (Matrix::identity(6, 6), Matrix::zeros(6, 1))
    }

    fn cost_weight(&self) -> Matrix {
        let mut s = Matrix::zeros(4, 4);
        s[(3, 3)] = 1.0 / (self.params.g * self.params.g);
        s
    }

    fn state_constraints(&self, _k: usize) -> Vec<ConvexConstraint> {
        vec![
            ConvexConstraint::NonNeg(AffineForm::var(Var::P(0)).plus_constant(-self.params.tf_min)),
            ConvexConstraint::NonNeg(AffineForm::term(Var::P(0), -1.0).plus_constant(self.params.tf_max)),
        ]
    }

    fn input_constraints(&self, _k: usize) -> Vec<ConvexConstraint> {
        let p = &self.params;
        vec![
            ConvexConstraint::NonNeg(AffineForm::var(Var::U(3)).plus_constant(-p.a_min)),
            ConvexConstraint::NonNeg(AffineForm::term(Var::U(3), -1.0).plus_constant(p.a_max)),
            ConvexConstraint::Soc {
                bound: AffineForm::var(Var::U(3)),
                vector: (0..3).map(|i| AffineForm::var(Var::U(i))).collect(),
            },
            ConvexConstraint::NonNeg(AffineForm::var(Var::U(2)).plus(Var::U(3), -p.theta_max.cos())),
        ]
    }

    fn control_affine(&self, _t: f64, x: &Vector, p: &Vector) -> Option<(Vector, Matrix)> {
        let f0 = dvector![x[3], x[4], x[5], 0.0, 0.0, -self.params.g] * p[0];
        let mut b = Matrix::zeros(6, 4);
        b.view_mut((3, 0), (3, 3)).fill_with_identity();
        Some((f0, b * p[0]))
    }

    fn scaling_bounds(&self) -> Bounds {
        let p = &self.params;
        let mut x = Vec::new();
        for i in 0..3 {
            let (lo, hi) = (p.r0[i].min(p.rf[i]), p.r0[i].max(p.rf[i]));
            x.push((lo - 1.0, hi + 1.0));
        }
        let dist = (Vector3::from(p.rf) - Vector3::from(p.r0)).norm();
        let vref = (2.0 * dist / p.tf_max).max(1.0);
        x.extend([(-vref, vref); 3]);
        let u = vec![(-p.a_max, p.a_max), (-p.a_max, p.a_max), (0.0, p.a_max), (p.a_min, p.a_max)];
        Bounds { x, u, p: vec![(p.tf_min, p.tf_max)] }
    }
}

/// Straight line between the boundary states, hover input `a = g n̂`,
/// `σ = g`, and the midpoint final time.
pub fn quadrotor_guess(params: &QuadrotorParams, grid: TimeGrid) -> Result<TrajectoryIterate, VehicleError> {
    let cat = |r: &[f64; 3], v: &[f64; 3]| Vector::from_iterator(6, r.iter().chain(v.iter()).copied());
    let hover = dvector![0.0, 0.0, params.g, params.g];
    Ok(straight_line_guess(
        &cat(&params.r0, &params.v0),
        &cat(&params.rf, &params.vf),
        &hover,
        &hover,
        dvector![(params.tf_min + params.tf_max) / 2.0],
        grid,
    )?)
}
