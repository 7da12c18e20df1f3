#![allow(dead_code)]

use nalgebra::{dmatrix, dvector};
use trajopt_ocp::*;

/// `ẍ = u` on a fixed horizon, `min ∫u²`, with an optional input bound.
pub struct Integrator {
    pub target: f64,
    pub u_max: Option<f64>,
}

impl Ocp for Integrator {
    fn dims(&self) -> Dims {
        Dims { n: 2, m: 1, d: 0, n_s: 0, n_ic: 2, n_tc: 2 }
    }
    fn dynamics(&self, _t: f64, x: &Vector, u: &Vector, _p: &Vector) -> Vector {
        dvector![x[1], u[0]]
    }
    fn dynamics_jacobians(&self, _t: f64, _x: &Vector, _u: &Vector, _p: &Vector) -> (Matrix, Matrix, Matrix) {
        (dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![0.0; 1.0], Matrix::zeros(2, 0))
    }
    fn initial(&self, x: &Vector, _p: &Vector) -> Vector {
        x.clone()
    }
    fn initial_jacobians(&self, _x: &Vector, _p: &Vector) -> (Matrix, Matrix) {
        (Matrix::identity(2, 2), Matrix::zeros(2, 0))
    }
    fn terminal(&self, x: &Vector, _p: &Vector) -> Vector {
        x - dvector![self.target, 0.0]
    }
    fn terminal_jacobians(&self, _x: &Vector, _p: &Vector) -> (Matrix, Matrix) {
        (Matrix::identity(2, 2), Matrix::zeros(2, 0))
    }
    fn cost_weight(&self) -> Matrix {
        dmatrix![1.0]
    }
    fn input_constraints(&self, _k: usize) -> Vec<ConvexConstraint> {
        match self.u_max {
            Some(b) => vec![
                ConvexConstraint::NonNeg(AffineForm::term(Var::U(0), -1.0).plus_constant(b)),
                ConvexConstraint::NonNeg(AffineForm::var(Var::U(0)).plus_constant(b)),
            ],
            None => Vec::new(),
        }
    }
    fn control_affine(&self, _t: f64, x: &Vector, _p: &Vector) -> Option<(Vector, Matrix)> {
        Some((dvector![x[1], 0.0], dmatrix![0.0; 1.0]))
    }
    fn scaling_bounds(&self) -> Bounds {
        Bounds { x: vec![(0.0, self.target.abs().max(1.0)), (0.0, 2.0)], u: vec![(-10.0, 10.0)], p: vec![] }
    }
}

/// Unicycle on a unit horizon with a circular keep-out zone and `min ∫‖u‖²`.
pub struct Unicycle {
    pub center: (f64, f64),
    pub radius: f64,
}

impl Unicycle {
    pub fn standard() -> Self {
        Self { center: (2.0, 0.1), radius: 0.8 }
    }

    pub fn guess(&self, n: usize) -> TrajectoryIterate {
        let grid = TimeGrid::new(n).unwrap();
        straight_line_guess(&dvector![0.0, 0.0, 0.0], &dvector![4.0, 0.0, 0.0], &dvector![4.0, 0.0], &dvector![4.0, 0.0], dvector![], grid)
            .unwrap()
    }
}

impl Ocp for Unicycle {
    fn dims(&self) -> Dims {
        Dims { n: 3, m: 2, d: 0, n_s: 1, n_ic: 3, n_tc: 2 }
    }
    fn dynamics(&self, _t: f64, x: &Vector, u: &Vector, _p: &Vector) -> Vector {
        dvector![u[0] * x[2].cos(), u[0] * x[2].sin(), u[1]]
    }
    fn dynamics_jacobians(&self, _t: f64, x: &Vector, u: &Vector, _p: &Vector) -> (Matrix, Matrix, Matrix) {
        let (s, c) = x[2].sin_cos();
        (
            dmatrix![0.0, 0.0, -u[0] * s; 0.0, 0.0, u[0] * c; 0.0, 0.0, 0.0],
            dmatrix![c, 0.0; s, 0.0; 0.0, 1.0],
            Matrix::zeros(3, 0),
        )
    }
    fn path(&self, _k: usize, x: &Vector, _u: &Vector, _p: &Vector) -> Vector {
        let (dx, dy) = (x[0] - self.center.0, x[1] - self.center.1);
        dvector![self.radius.powi(2) - dx * dx - dy * dy]
    }
    fn path_jacobians(&self, _k: usize, x: &Vector, _u: &Vector, _p: &Vector) -> (Matrix, Matrix, Matrix) {
        let (dx, dy) = (x[0] - self.center.0, x[1] - self.center.1);
        (dmatrix![-2.0 * dx, -2.0 * dy, 0.0], Matrix::zeros(1, 2), Matrix::zeros(1, 0))
    }
    fn initial(&self, x: &Vector, _p: &Vector) -> Vector {
        x.clone()
    }
    fn initial_jacobians(&self, _x: &Vector, _p: &Vector) -> (Matrix, Matrix) {
        (Matrix::identity(3, 3), Matrix::zeros(3, 0))
    }
    fn terminal(&self, x: &Vector, _p: &Vector) -> Vector {
        dvector![x[0] - 4.0, x[1]]
    }
    fn terminal_jacobians(&self, _x: &Vector, _p: &Vector) -> (Matrix, Matrix) {
        (dmatrix![1.0, 0.0, 0.0; 0.0, 1.0, 0.0], Matrix::zeros(2, 0))
    }
    fn cost_weight(&self) -> Matrix {
        Matrix::identity(2, 2)
    }
    fn control_affine(&self, _t: f64, x: &Vector, _p: &Vector) -> Option<(Vector, Matrix)> {
        let (s, c) = x[2].sin_cos();
        Some((Vector::zeros(3), dmatrix![c, 0.0; s, 0.0; 0.0, 1.0]))
    }
    fn scaling_bounds(&self) -> Bounds {
        Bounds { x: vec![(0.0, 4.0), (-2.0, 2.0), (-1.0, 1.0)], u: vec![(0.0, 8.0), (-5.0, 5.0)], p: vec![] }
    }
}

/// Minimum `Σ trapz(u²)` for the FOH double integrator from rest at 0 to
/// rest at `target`, by eliminating the states and solving the equality
/// constrained least-squares problem in closed form.
pub fn integrator_optimum(n: usize, target: f64) -> f64 {
    let dt = 1.0 / (n - 1) as f64;
    let a = dmatrix![1.0, dt; 0.0, 1.0];
    let bm = dvector![dt * dt / 3.0, dt / 2.0];
    let bp = dvector![dt * dt / 6.0, dt / 2.0];
    // x_N = Σ_k A^{N−2−k}(B⁻ u_k + B⁺ u_{k+1})
    let mut m = Matrix::zeros(2, n);
    let mut power = Matrix::identity(2, 2);
    for k in (0..n - 1).rev() {
        let cm = &power * &bm;
        let cp = &power * &bp;
        for i in 0..2 {
            m[(i, k)] += cm[i];
            m[(i, k + 1)] += cp[i];
        }
        power = &power * &a;
    }
    let w = Matrix::from_diagonal(&Vector::from_fn(n, |k, _| if k == 0 || k == n - 1 { dt / 2.0 } else { dt }));
    let winv = w.clone().try_inverse().unwrap();
    let b = dvector![target, 0.0];
    let gram = &m * &winv * m.transpose();
    (b.transpose() * gram.try_inverse().unwrap() * &b)[0]
}
