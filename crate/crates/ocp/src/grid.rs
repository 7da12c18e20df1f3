use serde::{Deserialize, Serialize};

use crate::OcpError;

/// Uniform grid of `n` nodes on normalized time `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    n: usize,
}

impl TimeGrid {
    pub fn new(n: usize) -> Result<Self, OcpError> {
        if n < 2 {
            return Err(OcpError::TooShort(n));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn intervals(&self) -> usize {
        self.n - 1
    }

    pub fn dt(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        if k + 1 == self.n {
            1.0
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.t(k)).collect()
    }
}
