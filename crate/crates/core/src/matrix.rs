//! Row-stochastic transition matrices and the per-user adversary model.
//!
//! A backward matrix holds `Pr(l^{t-1} = k | l^t = j)` at `(j, k)`; a forward
//! matrix holds `Pr(l^t = k | l^{t-1} = j)`. Both are validated the same way.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};

/// Maximum allowed deviation of a row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Validates a square grid of probabilities.
    ///
    /// Rows whose sum is within [`ROW_SUM_TOLERANCE`] of 1 are renormalized
    /// (unless already exact to rounding); anything further off is rejected.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut data = Vec::with_capacity(n * n);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NonSquare { row: j, len: row.len(), expected: n });
            }
            for (k, &p) in row.iter().enumerate() {
                if !p.is_finite() {
                    return Err(Error::NonFiniteEntry { row: j, col: k });
                }
                if p < 0.0 {
                    return Err(Error::NegativeEntry { row: j, col: k, value: p });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowSumViolation { row: j, sum });
            }
            // Sums already at rounding level are kept so that a saved matrix
            // loads back bit-exactly.
            if (sum - 1.0).abs() <= 4.0 * n as f64 * f64::EPSILON {
                data.extend_from_slice(row);
            } else {
                data.extend(row.iter().map(|p| p / sum));
            }
        }
        Ok(Self { n, data })
    }

    /// Builds a matrix from a row-major buffer of length `n * n`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if data.len() != n * n {
            return Err(Error::NonSquare { row: data.len() / n, len: data.len() % n, expected: n });
        }
        Self::new(data.chunks(n).map(<[f64]>::to_vec).collect())
    }

    pub fn identity(n: usize) -> Self {
        assert!(n > 0, "identity matrix needs n >= 1");
        let mut data = vec![0.0; n * n];
        for j in 0..n {
            data[j * n + j] = 1.0;
        }
        Self { n, data }
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform matrix needs n >= 1");
        Self { n, data: vec![1.0 / n as f64; n * n] }
    }

    /// Domain size.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks(self.n)
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.data[j * self.n + k]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Hash of the exact entry bits; used as a cache key.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.n.hash(&mut h);
        for p in &self.data {
            p.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// True when two rows have disjoint supports. Such a pair gives `q = 1`,
    /// `d = 0`, so the loss function is the identity and leakage accumulates
    /// linearly forever.
    pub fn has_disjoint_rows(&self) -> bool {
        for a in 0..self.n {
            for b in 0..self.n {
                if a != b && self.row(a).iter().zip(self.row(b)).all(|(&x, &y)| x == 0.0 || y == 0.0) {
                    return true;
                }
            }
        }
        false
    }
}

impl fmt::Debug for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

/// What an adversary knows about one user's temporal correlations.
///
/// `None` means the adversary lacks that direction of correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryModel {
    pub user_id: String,
    backward: Option<TransitionMatrix>,
    forward: Option<TransitionMatrix>,
}

impl AdversaryModel {
    pub fn new(
        user_id: impl Into<String>,
        backward: Option<TransitionMatrix>,
        forward: Option<TransitionMatrix>,
    ) -> Result<Self> {
        if let (Some(b), Some(f)) = (&backward, &forward) {
            if b.n() != f.n() {
                return Err(Error::DimensionMismatch { backward: b.n(), forward: f.n() });
            }
        }
        Ok(Self { user_id: user_id.into(), backward, forward })
    }

    /// The traditional DP adversary: no temporal knowledge.
    pub fn uncorrelated(user_id: impl Into<String>) -> Self {
        Self { user_id: user_id.into(), backward: None, forward: None }
    }

    pub fn backward(&self) -> Option<&TransitionMatrix> {
        self.backward.as_ref()
    }

    pub fn forward(&self) -> Option<&TransitionMatrix> {
        self.forward.as_ref()
    }
}
