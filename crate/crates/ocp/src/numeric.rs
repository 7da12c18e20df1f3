use num_traits::Float;

use crate::OcpError;

/// Trapezoidal rule on a uniform grid: `dt/2 · Σ (z_k + z_{k+1})`.
pub fn trapz<T: Float>(z: &[T], dt: T) -> Result<T, OcpError> {
    if z.len() < 2 {
        return Err(OcpError::TooShort(z.len()));
    }
    let two = T::one() + T::one();
    let sum = z.windows(2).fold(T::zero(), |acc, w| acc + w[0] + w[1]);
    Ok(sum * dt / two)
}

/// `‖v‖₁`
pub fn norm1<T: Float>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc + x.abs())
}

/// `‖v‖∞`
pub fn norm_inf<T: Float>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

pub fn norm2<T: Float>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc + *x * *x).sqrt()
}

/// Positive part.
pub fn pos<T: Float>(v: T) -> T {
    v.max(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapz_constant_and_ramp() {
        assert!((trapz(&[1.0; 11], 0.1).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(trapz(&[0.0, 1.0], 1.0).unwrap(), 0.5);
        let ramp: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
        assert_eq!(trapz(&ramp, 0.125).unwrap(), 0.5);
        assert_eq!(trapz(&[0.5f32, 0.5], 2.0).unwrap(), 1.0f32);
    }

    #[test]
    fn trapz_rejects_short() {
        assert!(trapz(&[1.0], 1.0).is_err());
    }

    #[test]
    fn norms() {
        assert_eq!(norm1(&[1.0, -2.0, 3.0]), 6.0);
        assert_eq!(norm_inf(&[1.0, -4.0]), 4.0);
        assert_eq!(norm2(&[3.0f32, 4.0]), 5.0);
        assert_eq!(pos(-1.0), 0.0);
    }
}
