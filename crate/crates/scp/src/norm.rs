use serde::{Deserialize, Serialize};
use trajopt_conic::{LinExpr, ProgramBuilder};

/// Norms available for trust regions and stopping tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    /// squared two-norm
    #[serde(rename = "2+")]
    TwoSquared,
    #[serde(rename = "inf")]
    Inf,
}

impl Norm {
    pub fn eval(self, v: &[f64]) -> f64 {
        match self {
            Norm::One => v.iter().map(|x| x.abs()).sum(),
            Norm::Two => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::TwoSquared => v.iter().map(|x| x * x).sum(),
            Norm::Inf => v.iter().fold(0.0, |a, x| a.max(x.abs())),
        }
    }

    /// Returns an expression `t` constrained by `t ≥ ‖es‖`.
    pub fn emit(self, b: &mut ProgramBuilder, es: Vec<LinExpr>) -> LinExpr {
        if es.is_empty() {
            return LinExpr::zero();
        }
        match self {
            Norm::One => {
                let mut t = LinExpr::zero();
                for a in b.abs_bounds(&es) {
                    t.add(a, 1.0);
                }
                t
            }
            Norm::Two => LinExpr::var(b.norm2_bound(es)),
            Norm::TwoSquared => {
                let t = LinExpr::var(b.var());
                b.square_epigraph(&t, es);
                t
            }
            Norm::Inf => {
                let t = b.var();
                for e in es {
                    b.nonneg(LinExpr::var(t).plus_expr(&e, -1.0));
                    b.nonneg(LinExpr::var(t).plus_expr(&e, 1.0));
                }
                LinExpr::var(t)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        let v = [3.0, -4.0];
        assert_eq!(Norm::One.eval(&v), 7.0);
        assert_eq!(Norm::Two.eval(&v), 5.0);
        assert_eq!(Norm::TwoSquared.eval(&v), 25.0);
        assert_eq!(Norm::Inf.eval(&v), 4.0);
        assert_eq!(Norm::Inf.eval(&[]), 0.0);
    }

    #[test]
    fn serde_names() {
        let s: Vec<Norm> = serde_json_like(&["1", "2", "2+", "inf"]);
        assert_eq!(s, vec![Norm::One, Norm::Two, Norm::TwoSquared, Norm::Inf]);
    }

    fn serde_json_like(names: &[&str]) -> Vec<Norm> {
        use serde::de::value::{Error, StrDeserializer};
        use serde::de::IntoDeserializer;
        names
            .iter()
            .map(|n| {
                let d: StrDeserializer<Error> = n.into_deserializer();
                Norm::deserialize(d).unwrap()
            })
            .collect()
    }
}
