//! Unit quaternions stored vector-first, `q = (q_v, q_s)`, with the Hamilton
//! product. Angular velocities enter products as pure quaternions `(ω, 0)`.

use nalgebra::{Matrix3, Vector3, Vector4};

pub type Quat = Vector4<f64>;

pub fn identity() -> Quat {
    Quat::new(0.0, 0.0, 0.0, 1.0)
}

/// `q ⊗ r`
pub fn quat_mul(q: &Quat, r: &Quat) -> Quat {
    let (qv, qs) = (q.xyz(), q.w);
    let (rv, rs) = (r.xyz(), r.w);
    let v = rv * qs + qv * rs + qv.cross(&rv);
    Quat::new(v.x, v.y, v.z, qs * rs - qv.dot(&rv))
}

pub fn quat_conj(q: &Quat) -> Quat {
    Quat::new(-q.x, -q.y, -q.z, q.w)
}

/// Angle-axis form of a unit quaternion, with `α ∈ [0, 2π]` so that
/// `quat_log_map(quat_exp_map(q)) = q` exactly (no sign flip). The identity
/// and `−identity` map to the axis `(0, 0, 1)`.
pub fn quat_exp_map(q: &Quat) -> (f64, Vector3<f64>) {
    let v = q.xyz();
    let n = v.norm();
    if n < 1e-15 {
        let alpha = if q.w >= 0.0 { 0.0 } else { 2.0 * std::f64::consts::PI };
        return (alpha, Vector3::z());
    }
    (2.0 * n.atan2(q.w), v / n)
}

/// Quaternion of a rotation by `α` about the unit `axis`.
pub fn quat_log_map(alpha: f64, axis: &Vector3<f64>) -> Quat {
    let (s, c) = (alpha / 2.0).sin_cos();
    Quat::new(axis.x * s, axis.y * s, axis.z * s, c)
}

/// `q₀ ⊗ log(t · exp(q₀* ⊗ q_f))`, a constant-rate rotation about a fixed
/// axis with `q(0) = q₀` and `q(1) = q_f`. The sign of `q_f` selects the
/// direction of travel; pass `q_f` with `q₀·q_f ≥ 0` for the short way round.
pub fn slerp(q0: &Quat, qf: &Quat, t: f64) -> Quat {
    let qe = quat_mul(&quat_conj(q0), qf);
    let (alpha, axis) = quat_exp_map(&qe);
    quat_mul(q0, &quat_log_map(t * alpha, &axis))
}

/// Rotation matrix `R(q)` with `R(q ⊗ r) = R(q) R(r)`.
pub fn rotation_matrix(q: &Quat) -> Matrix3<f64> {
    let (x, y, z, w) = (q.x, q.y, q.z, q.w);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - z * w),
        2.0 * (x * z + y * w),
        2.0 * (x * y + z * w),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - x * w),
        2.0 * (x * z - y * w),
        2.0 * (y * z + x * w),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// `½ q ⊗ (ω, 0)`
pub fn kinematics(q: &Quat, w: &Vector3<f64>) -> Quat {
    quat_mul(q, &Quat::new(w.x, w.y, w.z, 0.0)) * 0.5
}

/// Jacobians of [`kinematics`] with respect to `q` (4×4) and `ω` (4×3).
pub fn kinematics_jacobians(q: &Quat, w: &Vector3<f64>) -> (nalgebra::Matrix4<f64>, nalgebra::Matrix4x3<f64>) {
    let mut dq = nalgebra::Matrix4::zeros();
    dq.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-w.cross_matrix() * 0.5));
    dq.fixed_view_mut::<3, 1>(0, 3).copy_from(&(w * 0.5));
    dq.fixed_view_mut::<1, 3>(3, 0).copy_from(&(-w.transpose() * 0.5));
    let mut dw = nalgebra::Matrix4x3::zeros();
    let qv = q.xyz();
    dw.fixed_view_mut::<3, 3>(0, 0).copy_from(&((Matrix3::identity() * q.w + qv.cross_matrix()) * 0.5));
    dw.fixed_view_mut::<1, 3>(3, 0).copy_from(&(-qv.transpose() * 0.5));
    (dq, dw)
}
