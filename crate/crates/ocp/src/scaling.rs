use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::iterate::TrajectoryIterate;
use crate::{OcpError, Vector};

/// Per-variable `(lo, hi)` ranges of states, inputs and parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Bounds {
    pub x: Vec<(f64, f64)>,
    pub u: Vec<(f64, f64)>,
    pub p: Vec<(f64, f64)>,
}

/// Affine map `z = S ẑ + c` with diagonal `S`, stored as the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingMap {
    pub sx: Vector,
    pub cx: Vector,
    pub su: Vector,
    pub cu: Vector,
    pub sp: Vector,
    pub cp: Vector,
}

/// Scale and offset for one variable: `S = hi − lo`, `c = lo`. A degenerate
/// range `hi == lo` keeps `S = 1`.
pub fn interval_scaling<T: Float>(lo: T, hi: T) -> Result<(T, T), OcpError> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(OcpError::Invalid(format!(
            "scaling range [{}, {}] is not a finite interval",
            lo.to_f64().unwrap_or(f64::NAN),
            hi.to_f64().unwrap_or(f64::NAN)
        )));
    }
    if hi == lo {
        return Ok((T::one(), lo));
    }
    Ok((hi - lo, lo))
}

fn build(ranges: &[(f64, f64)], what: &str) -> Result<(Vector, Vector), OcpError> {
    let mut s = Vector::zeros(ranges.len());
    let mut c = Vector::zeros(ranges.len());
    for (i, &(lo, hi)) in ranges.iter().enumerate() {
        let (si, ci) = interval_scaling(lo, hi)?;
        if hi == lo {
            log::warn!("{what}[{i}] has a degenerate scaling range at {lo}; using unit scale");
        }
        s[i] = si;
        c[i] = ci;
    }
    Ok((s, c))
}

pub fn make_scaling(bounds: &Bounds) -> Result<ScalingMap, OcpError> {
    let (sx, cx) = build(&bounds.x, "x")?;
    let (su, cu) = build(&bounds.u, "u")?;
    let (sp, cp) = build(&bounds.p, "p")?;
    Ok(ScalingMap { sx, cx, su, cu, sp, cp })
}

impl ScalingMap {
    pub fn identity(n: usize, m: usize, d: usize) -> Self {
        Self {
            sx: Vector::from_element(n, 1.0),
            cx: Vector::zeros(n),
            su: Vector::from_element(m, 1.0),
            cu: Vector::zeros(m),
            sp: Vector::from_element(d, 1.0),
            cp: Vector::zeros(d),
        }
    }

    pub fn scale_x(&self, x: &Vector) -> Vector {
        (x - &self.cx).component_div(&self.sx)
    }

    pub fn scale_u(&self, u: &Vector) -> Vector {
        (u - &self.cu).component_div(&self.su)
    }

    pub fn scale_p(&self, p: &Vector) -> Vector {
        (p - &self.cp).component_div(&self.sp)
    }

    pub fn unscale_x(&self, x: &Vector) -> Vector {
        x.component_mul(&self.sx) + &self.cx
    }

    pub fn unscale_u(&self, u: &Vector) -> Vector {
        u.component_mul(&self.su) + &self.cu
    }

    pub fn unscale_p(&self, p: &Vector) -> Vector {
        p.component_mul(&self.sp) + &self.cp
    }

    fn check(&self, it: &TrajectoryIterate) -> Result<(), OcpError> {
        let ok = it.x.iter().all(|x| x.len() == self.sx.len())
            && it.u.iter().all(|u| u.len() == self.su.len())
            && it.p.len() == self.sp.len();
        if ok {
            Ok(())
        } else {
            Err(OcpError::Dimension("iterate does not match scaling map".into()))
        }
    }

    /// Maps an iterate to scaled coordinates. Virtual controls are left as is.
    pub fn scale(&self, it: &TrajectoryIterate) -> Result<TrajectoryIterate, OcpError> {
        self.check(it)?;
        Ok(TrajectoryIterate {
            grid: it.grid,
            x: it.x.iter().map(|x| self.scale_x(x)).collect(),
            u: it.u.iter().map(|u| self.scale_u(u)).collect(),
            p: self.scale_p(&it.p),
            virtuals: it.virtuals.clone(),
        })
    }

    pub fn unscale(&self, it: &TrajectoryIterate) -> Result<TrajectoryIterate, OcpError> {
        self.check(it)?;
        Ok(TrajectoryIterate {
            grid: it.grid,
            x: it.x.iter().map(|x| self.unscale_x(x)).collect(),
            u: it.u.iter().map(|u| self.unscale_u(u)).collect(),
            p: self.unscale_p(&it.p),
            virtuals: it.virtuals.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn example() -> ScalingMap {
        make_scaling(&Bounds { x: vec![(100.0, 1000.0), (-10.0, 10.0)], u: vec![], p: vec![] }).unwrap()
    }

    #[test]
    fn text_example() {
        let s = example();
        assert_eq!(s.sx, dvector![900.0, 20.0]);
        assert_eq!(s.cx, dvector![100.0, -10.0]);
        assert_eq!(s.scale_x(&dvector![550.0, 0.0]), dvector![0.5, 0.5]);
        assert_eq!(s.scale_x(&dvector![100.0, -10.0]), dvector![0.0, 0.0]);
    }

    #[test]
    fn unit_and_degenerate_ranges() {
        assert_eq!(interval_scaling(0.0, 1.0).unwrap(), (1.0, 0.0));
        assert_eq!(interval_scaling(5.0, 5.0).unwrap(), (1.0, 5.0));
        assert_eq!(interval_scaling(2.0f32, 6.0).unwrap(), (4.0, 2.0));
        assert!(interval_scaling(1.0, 0.0).is_err());
    }
}
