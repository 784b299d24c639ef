//! Binary-input symmetric-output (BISO) channels.
//!
//! A BISO channel is a `2 x q` row-stochastic matrix whose columns split
//! into symmetric pairs `(c,d)/(d,c)` plus columns constant across the two
//! rows. BSC and BEC are the standard members.

use crate::{Error, Result, PROB_TOL};
use serde::{Deserialize, Serialize};

/// A validated BISO channel, stored as its symmetric-pair decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BisoChannel {
    /// `(c, d)` per symmetric column pair: the pair contributes columns
    /// `(c,d)` and `(d,c)`.
    pair_params: Vec<(f64, f64)>,
    /// Values of columns constant across both rows.
    const_cols: Vec<f64>,
    /// Materialized `2 x q` table, in the original column order.
    rows: [Vec<f64>; 2],
}

impl BisoChannel {
    /// Binary symmetric channel with flip probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("BSC flip probability {p} not in [0,1]")));
        }
        Self::from_matrix(&[vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Binary erasure channel with erasure probability `e`; column order is
    /// (0, erasure, 1).
    pub fn bec(e: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::InvalidParameter(format!("BEC erasure probability {e} not in [0,1]")));
        }
        Self::from_matrix(&[vec![1.0 - e, e, 0.0], vec![0.0, e, 1.0 - e]])
    }

    /// Validates a `2 x q` stochastic table as BISO and returns its
    /// decomposition. Pairing is greedy: column `(c,d)` is matched with the
    /// first remaining column equal to `(d,c)` within 1e-12.
    pub fn from_matrix(matrix: &[Vec<f64>]) -> Result<Self> {
        if matrix.len() != 2 {
            return Err(Error::NotBiso(format!("expected 2 rows, got {}", matrix.len())));
        }
        let q = matrix[0].len();
        if matrix[1].len() != q || q == 0 {
            return Err(Error::NotBiso("rows must be nonempty and of equal length".into()));
        }
        for row in matrix {
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::NotBiso("negative or non-finite entry".into()));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::NotBiso(format!("row sums to {sum}, not 1")));
            }
        }

        let mut pair_params = Vec::new();
        let mut const_cols = Vec::new();
        let mut used = vec![false; q];
        for i in 0..q {
            if used[i] {
                continue;
            }
            let (c, d) = (matrix[0][i], matrix[1][i]);
            if (c - d).abs() <= PROB_TOL {
                used[i] = true;
                const_cols.push(c);
                continue;
            }
            let partner = (i + 1..q).find(|&j| {
                !used[j]
                    && (matrix[0][j] - d).abs() <= PROB_TOL
                    && (matrix[1][j] - c).abs() <= PROB_TOL
            });
            match partner {
                Some(j) => {
                    used[i] = true;
                    used[j] = true;
                    pair_params.push((c, d));
                }
                None => {
                    return Err(Error::NotBiso(format!(
                        "column {i} = ({c}, {d}) has no symmetric partner"
                    )))
                }
            }
        }

        Ok(BisoChannel {
            pair_params,
            const_cols,
            rows: [matrix[0].clone(), matrix[1].clone()],
        })
    }

    /// The materialized `2 x q` table, original column order.
    pub fn rows(&self) -> &[Vec<f64>; 2] {
        &self.rows
    }

    pub fn q(&self) -> usize {
        self.rows[0].len()
    }

    pub fn pair_params(&self) -> &[(f64, f64)] {
        &self.pair_params
    }

    pub fn const_cols(&self) -> &[f64] {
        &self.const_cols
    }

    /// `(s, d) = (W(1|0)+W(1|1), W(1|0)-W(1|1))` for binary-output channels.
    pub fn sd(&self) -> Option<(f64, f64)> {
        if self.q() != 2 {
            return None;
        }
        let (w10, w11) = (self.rows[0][1], self.rows[1][1]);
        Some((w10 + w11, w10 - w11))
    }

    /// Channel entropy `H(W)` in bits under a uniform input.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for row in &self.rows {
            for &p in row {
                if p > 0.0 {
                    h -= 0.5 * p * p.log2();
                }
            }
        }
        h
    }
}
