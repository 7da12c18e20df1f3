use crate::constraint::ConvexConstraint;
use crate::scaling::Bounds;
use crate::{Matrix, OcpError, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    /// state
    pub n: usize,
    /// input
    pub m: usize,
    /// parameter
    pub d: usize,
    /// nonconvex path constraints
    pub n_s: usize,
    /// initial boundary conditions
    pub n_ic: usize,
    /// terminal boundary conditions
    pub n_tc: usize,
}

/// Nonconvex optimal control problem on normalized time `t ∈ [0, 1]`:
///
/// ```text
/// min  φ(x(1), p) + ∫ Γ(x, u, p) dt
/// s.t. ẋ = f(t, x, u, p),  (x, p) ∈ X,  (u, p) ∈ U,  s(t, x, u, p) ≤ 0,
///      g_ic(x(0), p) = 0,  g_tc(x(1), p) = 0
/// ```
///
/// `φ` is affine and `Γ(x, u, p) = uᵀSu + ℓ(x, p)ᵀu + g(x, p)` with constant
/// `S ⪰ 0`. Callbacks must be pure.
pub trait Ocp: Send + Sync {
    fn dims(&self) -> Dims;

    fn dynamics(&self, t: f64, x: &Vector, u: &Vector, p: &Vector) -> Vector;

    /// `(∂f/∂x, ∂f/∂u, ∂f/∂p)`
    fn dynamics_jacobians(&self, t: f64, x: &Vector, u: &Vector, p: &Vector) -> (Matrix, Matrix, Matrix);

    /// Parameter indices that `f` may depend on. Discretization integrates
    /// sensitivities for these columns only.
    fn dynamics_params(&self) -> Vec<usize> {
        (0..self.dims().d).collect()
    }

    /// Nonconvex path constraints `s ≤ 0` at node `k`.
    fn path(&self, _k: usize, _x: &Vector, _u: &Vector, _p: &Vector) -> Vector {
        Vector::zeros(0)
    }

    /// `(C, D, G)`
    fn path_jacobians(&self, _k: usize, _x: &Vector, _u: &Vector, _p: &Vector) -> (Matrix, Matrix, Matrix) {
        let d = self.dims();
        (Matrix::zeros(d.n_s, d.n), Matrix::zeros(d.n_s, d.m), Matrix::zeros(d.n_s, d.d))
    }

    fn initial(&self, x: &Vector, p: &Vector) -> Vector;

    /// `(H0, K0)`
    fn initial_jacobians(&self, x: &Vector, p: &Vector) -> (Matrix, Matrix);

    fn terminal(&self, x: &Vector, p: &Vector) -> Vector;

    /// `(Hf, Kf)`
    fn terminal_jacobians(&self, x: &Vector, p: &Vector) -> (Matrix, Matrix);

    /// Coefficients `(c_x, c_p)` of `φ(x, p) = c_xᵀx + c_pᵀp`.
    fn terminal_cost(&self) -> (Vector, Vector) {
        let d = self.dims();
        (Vector::zeros(d.n), Vector::zeros(d.d))
    }

    /// `S`
    fn cost_weight(&self) -> Matrix {
        let m = self.dims().m;
        Matrix::zeros(m, m)
    }

    /// `ℓ(x, p)`
    fn cost_linear(&self, _x: &Vector, _p: &Vector) -> Vector {
        Vector::zeros(self.dims().m)
    }

    /// `(∂ℓ/∂x, ∂ℓ/∂p)`
    fn cost_linear_jacobians(&self, _x: &Vector, _p: &Vector) -> (Matrix, Matrix) {
        let d = self.dims();
        (Matrix::zeros(d.m, d.n), Matrix::zeros(d.m, d.d))
    }

    /// `g(x, p)`
    fn cost_offset(&self, _x: &Vector, _p: &Vector) -> f64 {
        0.0
    }

    /// `(∇ₓg, ∇ₚg)`
    fn cost_offset_gradients(&self, _x: &Vector, _p: &Vector) -> (Vector, Vector) {
        let d = self.dims();
        (Vector::zeros(d.n), Vector::zeros(d.d))
    }

    /// Convex `(x, p) ∈ X` at node `k`.
    fn state_constraints(&self, _k: usize) -> Vec<ConvexConstraint> {
        Vec::new()
    }

    /// Convex `(u, p) ∈ U` at node `k`.
    fn input_constraints(&self, _k: usize) -> Vec<ConvexConstraint> {
        Vec::new()
    }

    /// `(f₀, [f₁ … f_m])` with `f = f₀ + Σ uᵢ fᵢ`, when the dynamics are control affine.
    fn control_affine(&self, _t: f64, _x: &Vector, _p: &Vector) -> Option<(Vector, Matrix)> {
        None
    }

    /// Virtual control gain `E` (n × n_ν).
    fn virtual_gain(&self) -> Matrix {
        Matrix::identity(self.dims().n, self.dims().n)
    }

    /// Variable ranges used to build the default scaling.
    fn scaling_bounds(&self) -> Bounds;
}

/// `Γ(x, u, p)`
pub fn running_cost(ocp: &dyn Ocp, x: &Vector, u: &Vector, p: &Vector) -> f64 {
    let s = ocp.cost_weight();
    (u.transpose() * &s * u)[0] + ocp.cost_linear(x, p).dot(u) + ocp.cost_offset(x, p)
}

/// `(A^Γ, B^Γ, F^Γ)`, the gradients of `Γ` with respect to `x`, `u` and `p`.
pub fn running_cost_gradients(ocp: &dyn Ocp, x: &Vector, u: &Vector, p: &Vector) -> (Vector, Vector, Vector) {
    let s = ocp.cost_weight();
    let l = ocp.cost_linear(x, p);
    let (lx, lp) = ocp.cost_linear_jacobians(x, p);
    let (gx, gp) = ocp.cost_offset_gradients(x, p);
    let du = (&s + s.transpose()) * u + l;
    (lx.transpose() * u + gx, du, lp.transpose() * u + gp)
}

/// Maps absolute-time dynamics `f_abs(x, u)` to normalized time through a
/// strictly positive parameter entry: `f(x, u, p) = p[index] · f_abs(x, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeDilation {
    pub index: usize,
}

impl TimeDilation {
    pub fn factor(&self, p: &Vector) -> Result<f64, OcpError> {
        let s = p[self.index];
        if s > 0.0 && s.is_finite() {
            Ok(s)
        } else {
            Err(OcpError::NonPhysicalDilation(s))
        }
    }

    pub fn dynamics(&self, f_abs: &Vector, p: &Vector) -> Result<Vector, OcpError> {
        Ok(f_abs * self.factor(p)?)
    }

    /// Chain rule: `∂f/∂x = p·A_abs`, `∂f/∂u = p·B_abs`, and the dilation
    /// column of `∂f/∂p` equals `f_abs`.
    pub fn jacobians(
        &self,
        f_abs: &Vector,
        a_abs: &Matrix,
        b_abs: &Matrix,
        p: &Vector,
    ) -> Result<(Matrix, Matrix, Matrix), OcpError> {
        let s = self.factor(p)?;
        let mut f = Matrix::zeros(f_abs.len(), p.len());
        f.set_column(self.index, f_abs);
        Ok((a_abs * s, b_abs * s, f))
    }
}
