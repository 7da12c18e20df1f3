//! Numeric checks of the LCvx controllability and transversality conditions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::LcvxError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub controllable: bool,
    pub transversality_independent: bool,
    pub notes: Vec<String>,
}

/// Numerical rank with singular values below `1e-10·σ_max` treated as zero.
pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-10 * smax).count()
}

/// `rank [B, AB, …, Aⁿ⁻¹B] = n`.
pub fn controllability_check(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<bool, LcvxError> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(LcvxError::Dimension(format!(
            "A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let m = b.ncols();
    let mut c = DMatrix::zeros(n, n * m);
    let mut blk = b.clone();
    for i in 0..n {
        c.view_mut((0, i * m), (n, m)).copy_from(&blk);
        blk = a * blk;
    }
    Ok(rank(&c) == n)
}

/// `m ∉ range(B)`, i.e. `rank [B | m] = rank B + 1`. A `B` with no columns
/// accepts any nonzero `m`.
pub fn transversality_check(m: &DVector<f64>, b: &DMatrix<f64>) -> bool {
    if b.ncols() > 0 && b.nrows() != m.len() {
        return false;
    }
    let mut bm = DMatrix::zeros(m.len(), b.ncols() + 1);
    if b.ncols() > 0 {
        bm.view_mut((0, 0), (m.len(), b.ncols())).copy_from(b);
    }
    bm.set_column(b.ncols(), m);
    rank(&bm) == rank(b) + 1
}
