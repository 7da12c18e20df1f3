use num_traits::Float;
use serde::{Deserialize, Serialize};

/// `P(y, z) = ‖y‖₁ + ‖z‖₁`
pub fn penalty<T: Float>(y: &[T], z: &[T]) -> T {
    y.iter().chain(z).fold(T::zero(), |a, v| a + v.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", from = "PenaltyRepr")]
pub enum PenaltyKind {
    QuadraticRectifier,
    Softplus { sharpness: f64 },
    /// `λ[z]⁺`, the softplus limit for infinite sharpness. Exact: violations
    /// vanish once `λ` exceeds the constraint multiplier.
    Hinge,
}

// serde ignores extra keys on unit variants of internally tagged enums
#[derive(Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
enum PenaltyRepr {
    QuadraticRectifier {},
    Softplus { sharpness: f64 },
    Hinge {},
}

impl From<PenaltyRepr> for PenaltyKind {
    fn from(r: PenaltyRepr) -> Self {
        match r {
            PenaltyRepr::QuadraticRectifier {} => PenaltyKind::QuadraticRectifier,
            PenaltyRepr::Softplus { sharpness } => PenaltyKind::Softplus { sharpness },
            PenaltyRepr::Hinge {} => PenaltyKind::Hinge,
        }
    }
}

/// `h_λ(z)` and its derivative.
pub fn h_penalty<T: Float>(z: T, lambda: T, kind: PenaltyKind) -> (T, T) {
    let zero = T::zero();
    let two = T::one() + T::one();
    match kind {
        PenaltyKind::QuadraticRectifier => {
            let a = z.max(zero);
            (lambda * a * a, two * lambda * a)
        }
        PenaltyKind::Softplus { sharpness } => {
            let s = T::from(sharpness).expect("sharpness fits the scalar type");
            // λ([z]⁺ + σ⁻¹ log(1 + e^{−σ|z|})) avoids overflow for large σz
            let value = lambda * (z.max(zero) + (-(s * z.abs())).exp().ln_1p() / s);
            let slope = lambda / (T::one() + (-(s * z)).exp());
            (value, slope)
        }
        PenaltyKind::Hinge => {
            if z > zero {
                (lambda * z, lambda)
            } else {
                (zero, zero)
            }
        }
    }
}
