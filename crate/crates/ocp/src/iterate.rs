use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::grid::TimeGrid;
use crate::{OcpError, Vector};

/// Virtual controls of an SCvx subproblem solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Virtuals {
    /// dynamics, one per interval (`ν_N = 0` is implied)
    pub nu: Vec<Vector>,
    /// nonconvex path constraints, one per node
    pub nu_s: Vec<Vector>,
    pub nu_ic: Vector,
    pub nu_tc: Vector,
}

/// Discrete trajectory on a normalized time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryIterate {
    pub grid: TimeGrid,
    pub x: Vec<Vector>,
    pub u: Vec<Vector>,
    pub p: Vector,
    pub virtuals: Option<Virtuals>,
}

impl TrajectoryIterate {
    pub fn new(grid: TimeGrid, x: Vec<Vector>, u: Vec<Vector>, p: Vector) -> Result<Self, OcpError> {
        if x.len() != grid.len() || u.len() != grid.len() {
            return Err(OcpError::Dimension(format!(
                "{} states and {} inputs on a {}-node grid",
                x.len(),
                u.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, x, u, p, virtuals: None })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Serialize, Deserialize)]
struct IterateJson {
    t: Vec<f64>,
    x: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
    p: Vec<f64>,
}

impl Serialize for TrajectoryIterate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        IterateJson {
            t: self.grid.times(),
            x: self.x.iter().map(|v| v.iter().copied().collect()).collect(),
            u: self.u.iter().map(|v| v.iter().copied().collect()).collect(),
            p: self.p.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrajectoryIterate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = IterateJson::deserialize(d)?;
        let grid = TimeGrid::new(raw.t.len()).map_err(D::Error::custom)?;
        for (k, (a, b)) in raw.t.iter().zip(grid.times()).enumerate() {
            if (a - b).abs() > 1e-9 {
                return Err(D::Error::custom(format!("t[{k}] = {a} is not on a uniform [0, 1] grid")));
            }
        }
        TrajectoryIterate::new(
            grid,
            raw.x.into_iter().map(Vector::from_vec).collect(),
            raw.u.into_iter().map(Vector::from_vec).collect(),
            Vector::from_vec(raw.p),
        )
        .map_err(D::Error::custom)
    }
}

/// Linear interpolation between boundary states and inputs; the parameter is
/// supplied by the caller.
pub fn straight_line_guess(
    x_ic: &Vector,
    x_tc: &Vector,
    u_ic: &Vector,
    u_tc: &Vector,
    p: Vector,
    grid: TimeGrid,
) -> Result<TrajectoryIterate, OcpError> {
    if x_ic.len() != x_tc.len() || u_ic.len() != u_tc.len() {
        return Err(OcpError::Dimension("boundary vectors differ in length".into()));
    }
    let lerp = |a: &Vector, b: &Vector, t: f64| a * (1.0 - t) + b * t;
    let x = grid.times().iter().map(|&t| lerp(x_ic, x_tc, t)).collect();
    let u = grid.times().iter().map(|&t| lerp(u_ic, u_tc, t)).collect();
    TrajectoryIterate::new(grid, x, u, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn scalar_line() {
        let g = TimeGrid::new(3).unwrap();
        let it = straight_line_guess(&dvector![0.0], &dvector![1.0], &dvector![2.0], &dvector![2.0], dvector![], g)
            .unwrap();
        let xs: Vec<f64> = it.x.iter().map(|v| v[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
        assert!(it.u.iter().all(|u| u[0] == 2.0));
        assert!(it.virtuals.is_none());
    }
}
