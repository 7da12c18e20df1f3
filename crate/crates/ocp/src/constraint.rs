use trajopt_conic::{LinExpr, ProgramBuilder};

use crate::Vector;

/// A scalar decision variable local to one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X(usize),
    U(usize),
    P(usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineForm {
    pub terms: Vec<(Var, f64)>,
    pub constant: f64,
}

impl AffineForm {
    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        Self { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    pub fn term(v: Var, c: f64) -> Self {
        Self { terms: vec![(v, c)], constant: 0.0 }
    }

    pub fn plus(mut self, v: Var, c: f64) -> Self {
        self.terms.push((v, c));
        self
    }

    pub fn plus_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, x: &Vector, u: &Vector, p: &Vector) -> f64 {
        self.terms
            .iter()
            .map(|&(v, c)| {
                c * match v {
                    Var::X(i) => x[i],
                    Var::U(i) => u[i],
                    Var::P(i) => p[i],
                }
            })
            .sum::<f64>()
            + self.constant
    }

    pub fn to_lin(&self, map: &impl Fn(Var) -> LinExpr) -> LinExpr {
        let mut e = LinExpr::constant(self.constant);
        for &(v, c) in &self.terms {
            e.add_expr(&map(v), c);
        }
        e
    }

    fn touches_state(&self) -> bool {
        self.terms.iter().any(|(v, _)| matches!(v, Var::X(_)))
    }
}

/// Convex constraint on one node's variables, in conic-representable form.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexConstraint {
    /// `a(z) ≥ 0`
    NonNeg(AffineForm),
    /// `‖v(z)‖₂ ≤ t(z)`
    Soc { bound: AffineForm, vector: Vec<AffineForm> },
}

impl ConvexConstraint {
    /// Convex indicator `w(z)`, nonpositive exactly when the constraint holds.
    pub fn violation(&self, x: &Vector, u: &Vector, p: &Vector) -> f64 {
        match self {
            ConvexConstraint::NonNeg(a) => -a.eval(x, u, p),
            ConvexConstraint::Soc { bound, vector } => {
                let n = vector.iter().map(|a| a.eval(x, u, p).powi(2)).sum::<f64>().sqrt();
                n - bound.eval(x, u, p)
            }
        }
    }

    pub fn involves_state(&self) -> bool {
        match self {
            ConvexConstraint::NonNeg(a) => a.touches_state(),
            ConvexConstraint::Soc { bound, vector } => {
                bound.touches_state() || vector.iter().any(AffineForm::touches_state)
            }
        }
    }

    /// Adds the constraint as hard conic rows.
    pub fn emit(&self, b: &mut ProgramBuilder, map: &impl Fn(Var) -> LinExpr) {
        match self {
            ConvexConstraint::NonNeg(a) => b.nonneg(a.to_lin(map)),
            ConvexConstraint::Soc { bound, vector } => {
                b.soc(bound.to_lin(map), vector.iter().map(|a| a.to_lin(map)).collect())
            }
        }
    }

    /// Adds a variable `w ≥ violation(z)` (`w` is otherwise free) and returns it.
    pub fn emit_epigraph(&self, b: &mut ProgramBuilder, map: &impl Fn(Var) -> LinExpr) -> usize {
        let w = b.var();
        match self {
            ConvexConstraint::NonNeg(a) => b.nonneg(a.to_lin(map).plus(w, 1.0)),
            ConvexConstraint::Soc { bound, vector } => {
                b.soc(bound.to_lin(map).plus(w, 1.0), vector.iter().map(|a| a.to_lin(map)).collect())
            }
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn violation_signs() {
        let x = dvector![3.0, 4.0];
        let e = Vector::zeros(0);
        let soc = ConvexConstraint::Soc {
            bound: AffineForm::constant(4.0),
            vector: vec![AffineForm::var(Var::X(0)), AffineForm::var(Var::X(1))],
        };
        assert_eq!(soc.violation(&x, &e, &e), 1.0);
        let lin = ConvexConstraint::NonNeg(AffineForm::var(Var::X(0)).plus_constant(-1.0));
        assert_eq!(lin.violation(&x, &e, &e), -2.0);
        assert!(soc.involves_state());
        assert!(!ConvexConstraint::NonNeg(AffineForm::var(Var::P(0))).involves_state());
    }
}
