use serde::{Deserialize, Serialize};

use crate::program::{Cone, ConicProgram};
use crate::solve::{ConicSolution, Status};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Euclidean projection onto the second-order cone `{(t, v) : ‖v‖ ≤ t}`.
pub fn project_soc(x: &[f64]) -> Vec<f64> {
    let t = x[0];
    let v = &x[1..];
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nv <= t {
        return x.to_vec();
    }
    if nv <= -t {
        return vec![0.0; x.len()];
    }
    let a = 0.5 * (t + nv);
    let mut out = Vec::with_capacity(x.len());
    out.push(a);
    out.extend(v.iter().map(|vi| a * vi / nv));
    out
}

/// Max-norm distance of `s` from the cone `K` (`dual = true` measures the
/// distance from `K*`, where the zero cone dualizes to the free cone).
pub fn cone_distance(program: &ConicProgram, s: &[f64], dual: bool) -> f64 {
    let mut worst: f64 = 0.0;
    for (cone, r) in program.cones.ranges() {
        let block = &s[r];
        let d = match cone {
            Cone::Zero(_) if dual => 0.0,
            Cone::Zero(_) => block.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
            Cone::Nonnegative(_) => block.iter().fold(0.0_f64, |m, v| m.max(-v)),
            Cone::SecondOrder(_) => {
                let p = project_soc(block);
                block.iter().zip(&p).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
            }
        };
        worst = worst.max(d);
    }
    worst
}

/// Primal feasibility of `x`, stationarity and dual-cone membership of `y`,
/// and the primal/dual objective gap.
pub fn kkt_residuals(program: &ConicProgram, x: &[f64], y: &[f64]) -> Residuals {
    let s = program.row_values(x);
    let primal = cone_distance(program, &s, false);
    let aty = program.constraint_matrix.mul_t(y);
    let stationarity = program.objective.iter().zip(&aty).fold(0.0_f64, |m, (q, a)| m.max((q - a).abs()));
    let dual = stationarity.max(cone_distance(program, y, true));
    let primal_obj = program.objective_value(x);
    let dual_obj = program.objective_constant - program.constraint_offset.iter().zip(y).map(|(c, y)| c * y).sum::<f64>();
    Residuals { primal, dual, gap: (primal_obj - dual_obj).abs() }
}

/// Normalized residual of the certificate carried by an infeasible or
/// unbounded solution; `None` for other statuses or a certificate pointing
/// the wrong way.
pub fn certificate_residual(program: &ConicProgram, solution: &ConicSolution) -> Option<f64> {
    match solution.status {
        Status::Infeasible => {
            let y = &solution.dual;
            let cty: f64 = program.constraint_offset.iter().zip(y).map(|(c, y)| c * y).sum();
            if cty >= 0.0 {
                return None;
            }
            let aty = program.constraint_matrix.mul_t(y);
            let r = aty.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(cone_distance(program, y, true));
            Some(r / cty.abs())
        }
        Status::Unbounded => {
            let x = &solution.primal;
            let qx: f64 = program.objective.iter().zip(x).map(|(q, x)| q * x).sum();
            if qx >= 0.0 {
                return None;
            }
            let ax = program.constraint_matrix.mul(x);
            Some(cone_distance(program, &ax, false) / qx.abs())
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{LinExpr, ProgramBuilder};

    fn x_ge_one() -> ConicProgram {
        let mut b = ProgramBuilder::new();
        let x = b.var();
        b.add_cost(x, 1.0);
        b.nonneg(LinExpr::var(x).plus_constant(-1.0));
        b.build().unwrap()
    }

    #[test]
    fn exact_optimum_has_zero_residuals() {
        let r = kkt_residuals(&x_ge_one(), &[1.0], &[1.0]);
        assert_eq!(r, Residuals { primal: 0.0, dual: 0.0, gap: 0.0 });
    }

    #[test]
    fn perturbed_primal_shifts_gap_only() {
        let r = kkt_residuals(&x_ge_one(), &[1.1], &[1.0]);
        assert_eq!(r.primal, 0.0);
        assert!((r.gap - 0.1).abs() < 1e-12);
    }

    #[test]
    fn soc_projection_cases() {
        assert_eq!(project_soc(&[5.0, 3.0, 4.0]), vec![5.0, 3.0, 4.0]);
        assert_eq!(project_soc(&[-5.0, 3.0, 4.0]), vec![0.0, 0.0, 0.0]);
        let p = project_soc(&[0.0, 3.0, 4.0]);
        assert!((p[0] - 2.5).abs() < 1e-15);
        assert!((p[1] - 1.5).abs() < 1e-15 && (p[2] - 2.0).abs() < 1e-15);
    }
}
