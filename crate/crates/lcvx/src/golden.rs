//! Golden-section line search over a unimodal scalar function.

use num_traits::Float;

#[derive(Debug, Clone)]
pub struct GoldenResult<T, S> {
    pub x: T,
    pub cost: T,
    pub payload: S,
    pub evaluations: usize,
    /// Final bracket.
    pub bracket: (T, T),
}

/// Minimises `f` over `[lo, hi]` until the bracket is at most `tol` wide.
///
/// `f` returns `None` where it is infeasible, which counts as `+∞`. Equal
/// costs keep the left subinterval, and the best point found is the smallest
/// `x` among ties. Returns `None` when no evaluated point was feasible.
pub fn golden_section<T, S>(
    mut f: impl FnMut(T) -> Option<(T, S)>,
    lo: T,
    hi: T,
    tol: T,
) -> Option<GoldenResult<T, S>>
where
    T: Float,
{
    let r = (T::from(5.0).unwrap().sqrt() - T::one()) / T::from(2.0).unwrap();
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut best: Option<(T, T, S)> = None;
    let mut evaluations = 0;
    let mut eval = |x: T, best: &mut Option<(T, T, S)>| -> T {
        evaluations += 1;
        match f(x) {
            Some((c, s)) if !c.is_nan() => {
                let better = match best {
                    None => true,
                    Some((bx, bc, _)) => c < *bc || (c == *bc && x < *bx),
                };
                if better {
                    *best = Some((x, c, s));
                }
                c
            }
            _ => T::infinity(),
        }
    };
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = eval(c, &mut best);
    let mut fd = eval(d, &mut best);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = eval(c, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = eval(d, &mut best);
        }
    }
    best.map(|(x, cost, payload)| GoldenResult { x, cost, payload, evaluations, bracket: (a, b) })
}
