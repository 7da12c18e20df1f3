//! Ellipsoidal keep-out zones, box rooms and the softmax flight-space SDF.

use nalgebra::{Matrix3, Vector3};
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::VehicleError;

/// Keep-out zone `‖H (r − c)‖ ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ellipsoid {
    /// Row-major shape matrix, symmetric positive definite.
    pub h: [[f64; 3]; 3],
    pub center: [f64; 3],
}

impl Ellipsoid {
    pub fn sphere(center: [f64; 3], radius: f64) -> Self {
        let k = 1.0 / radius;
        Self { h: [[k, 0.0, 0.0], [0.0, k, 0.0], [0.0, 0.0, k]], center }
    }

    pub fn shape(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.h[i][j])
    }

    pub fn validate(&self) -> Result<(), VehicleError> {
        let h = self.shape();
        let symmetric = (h - h.transpose()).amax() <= 1e-12 * h.amax().max(1.0);
        if !symmetric || h.iter().any(|v| !v.is_finite()) || h.cholesky().is_none() {
            return Err(VehicleError::Params(format!("obstacle shape {:?} is not symmetric positive definite", self.h)));
        }
        Ok(())
    }

    /// `s(r) = 1 − ‖H (r − c)‖`, nonpositive outside the zone.
    pub fn value(&self, r: &Vector3<f64>) -> f64 {
        1.0 - (self.shape() * (r - Vector3::from(self.center))).norm()
    }

    /// `∇s(r) = −Hᵀ H (r − c) / ‖H (r − c)‖`. At the center, where the norm
    /// is not differentiable, the gradient of the first axis is returned.
    pub fn gradient(&self, r: &Vector3<f64>) -> Vector3<f64> {
        let h = self.shape();
        let y = h * (r - Vector3::from(self.center));
        let n = y.norm();
        if n < 1e-12 {
            return -h.transpose() * Vector3::x();
        }
        -(h.transpose() * y) / n
    }
}

/// Axis-aligned box `l ≤ r ≤ u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Room {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl Room {
    pub fn centroid(&self) -> Vector3<f64> {
        (Vector3::from(self.upper) + Vector3::from(self.lower)) / 2.0
    }

    /// Half-diagonal `(u − l)/2`.
    pub fn diagonal(&self) -> Vector3<f64> {
        (Vector3::from(self.upper) - Vector3::from(self.lower)) / 2.0
    }

    pub fn validate(&self) -> Result<(), VehicleError> {
        if (0..3).all(|i| self.upper[i] > self.lower[i] && self.lower[i].is_finite() && self.upper[i].is_finite()) {
            Ok(())
        } else {
            Err(VehicleError::Params(format!("room {self:?} needs upper > lower")))
        }
    }
}

/// `1 − ‖(r − c)/s‖∞`: one at the centroid, zero on the faces.
pub fn room_sdf(r: &Vector3<f64>, room: &Room) -> f64 {
    1.0 - (r - room.centroid()).component_div(&room.diagonal()).amax()
}

/// `σ⁻¹ log Σ exp(σ vᵢ)`, shifted by `max v` against overflow.
pub fn softmax<T: Float>(v: &[T], sharpness: T) -> T {
    let m = v.iter().copied().fold(T::neg_infinity(), T::max);
    if m.is_infinite() {
        return m;
    }
    let sum = v.iter().fold(T::zero(), |acc, &x| acc + (sharpness * (x - m)).exp());
    m + sum.ln() / sharpness
}

/// `∂ softmax / ∂vᵢ = exp(σvᵢ) / Σⱼ exp(σvⱼ)`, a probability vector.
pub fn softmax_gradient<T: Float>(v: &[T], sharpness: T) -> Vec<T> {
    let m = v.iter().copied().fold(T::neg_infinity(), T::max);
    let w: Vec<T> = v.iter().map(|&x| (sharpness * (x - m)).exp()).collect();
    let sum = w.iter().fold(T::zero(), |a, &b| a + b);
    w.into_iter().map(|x| x / sum).collect()
}
