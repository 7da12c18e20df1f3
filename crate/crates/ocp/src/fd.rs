//! Central finite differences, used to audit analytic Jacobian callbacks.

use crate::problem::Ocp;
use crate::{Matrix, Vector};

/// Jacobian of `f` at `z` by central differences with step `h`.
pub fn jacobian(f: impl Fn(&Vector) -> Vector, z: &Vector, h: f64) -> Matrix {
    let f0 = f(z);
    let mut j = Matrix::zeros(f0.len(), z.len());
    let mut zp = z.clone();
    for i in 0..z.len() {
        let zi = z[i];
        zp[i] = zi + h;
        let fp = f(&zp);
        zp[i] = zi - h;
        let fm = f(&zp);
        zp[i] = zi;
        j.set_column(i, &((fp - fm) / (2.0 * h)));
    }
    j
}

/// Relative error `‖J − J_fd‖∞ / max(1, ‖J_fd‖∞)`.
pub fn relative_error(analytic: &Matrix, numeric: &Matrix) -> f64 {
    if analytic.is_empty() {
        return 0.0;
    }
    (analytic - numeric).amax() / numeric.amax().max(1.0)
}

/// Worst relative error over all Jacobian callbacks of `ocp` at one point.
/// Steps are taken in scaled coordinates, `h·S` per variable.
pub fn audit_point(
    ocp: &dyn Ocp,
    k: usize,
    t: f64,
    x: &Vector,
    u: &Vector,
    p: &Vector,
    scales: (&Vector, &Vector, &Vector),
    h: f64,
) -> f64 {
    let (sx, su, sp) = scales;
    let fd = |f: &dyn Fn(&Vector) -> Vector, z: &Vector, s: &Vector| {
        // differentiate g(ẑ) = f(S ẑ) and map back to unscaled columns
        let zh = z.component_div(s);
        let mut j = jacobian(|w| f(&w.component_mul(s)), &zh, h);
        for (c, si) in s.iter().enumerate() {
            j.column_mut(c).scale_mut(1.0 / si);
        }
        j
    };
    let (a, b, f) = ocp.dynamics_jacobians(t, x, u, p);
    let mut worst = relative_error(&a, &fd(&|z| ocp.dynamics(t, z, u, p), x, sx));
    worst = worst.max(relative_error(&b, &fd(&|z| ocp.dynamics(t, x, z, p), u, su)));
    worst = worst.max(relative_error(&f, &fd(&|z| ocp.dynamics(t, x, u, z), p, sp)));
    let (c, d, g) = ocp.path_jacobians(k, x, u, p);
    worst = worst.max(relative_error(&c, &fd(&|z| ocp.path(k, z, u, p), x, sx)));
    worst = worst.max(relative_error(&d, &fd(&|z| ocp.path(k, x, z, p), u, su)));
    worst = worst.max(relative_error(&g, &fd(&|z| ocp.path(k, x, u, z), p, sp)));
    let (h0, k0) = ocp.initial_jacobians(x, p);
    worst = worst.max(relative_error(&h0, &fd(&|z| ocp.initial(z, p), x, sx)));
    worst = worst.max(relative_error(&k0, &fd(&|z| ocp.initial(x, z), p, sp)));
    let (hf, kf) = ocp.terminal_jacobians(x, p);
    worst = worst.max(relative_error(&hf, &fd(&|z| ocp.terminal(z, p), x, sx)));
    worst.max(relative_error(&kf, &fd(&|z| ocp.terminal(x, z), p, sp)))
}
