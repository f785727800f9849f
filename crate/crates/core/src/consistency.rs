//! Saaty's consistency index and consistency ratio.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::PcMatrix;
use crate::priority::{derive_evm, EVM_MAX_ITER, EVM_TOL};

/// Conventional acceptability threshold for CI and CR.
pub const ACCEPTABLE: f64 = 0.1;

/// Random index RI(n): mean CI of fully random reciprocal matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomIndexTable {
    values: BTreeMap<usize, f64>,
}

impl Default for RandomIndexTable {
    fn default() -> Self {
        Self::saaty()
    }
}

impl RandomIndexTable {
    /// Saaty's table for n = 3..=10.
    pub fn saaty() -> Self {
        let values = [
            (3, 0.58),
            (4, 0.90),
            (5, 1.12),
            (6, 1.24),
            (7, 1.32),
            (8, 1.41),
            (9, 1.45),
            (10, 1.49),
        ]
        .into_iter()
        .collect();
        Self { values }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        Self {
            values: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, n: usize) -> Option<f64> {
        self.values.get(&n).copied()
    }

    pub fn insert(&mut self, n: usize, ri: f64) {
        self.values.insert(n, ri);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub ci: f64,
    pub cr: f64,
    pub ri: f64,
    pub lambda_max: f64,
}

/// `(λ_max − n) / (n − 1)` with λ_max from the eigenvector method.
pub fn consistency_index(c: &PcMatrix) -> Result<f64> {
    let pv = derive_evm(c, EVM_TOL, EVM_MAX_ITER)?;
    Ok(ci_from_lambda(pv.lambda_max.unwrap_or(c.n() as f64), c.n()))
}

pub fn ci_from_lambda(lambda_max: f64, n: usize) -> f64 {
    (lambda_max - n as f64) / (n as f64 - 1.0)
}

/// CI together with `CR = CI / RI(n)`.
pub fn consistency(c: &PcMatrix, table: &RandomIndexTable) -> Result<ConsistencyReport> {
    let n = c.n();
    let ri = table.get(n).ok_or(Error::RandomIndexUnavailable(n))?;
    let lambda_max = derive_evm(c, EVM_TOL, EVM_MAX_ITER)?
        .lambda_max
        .unwrap_or(n as f64);
    let ci = ci_from_lambda(lambda_max, n);
    let cr = if ri > 0.0 { ci / ri } else { 0.0 };
    Ok(ConsistencyReport {
        ci,
        cr,
        ri,
        lambda_max,
    })
}

/// Consistency ratio, or `None` when the table has no entry for `n`.
pub fn consistency_ratio(c: &PcMatrix, table: &RandomIndexTable) -> Result<Option<f64>> {
    match consistency(c, table) {
        Ok(r) => Ok(Some(r.cr)),
        Err(Error::RandomIndexUnavailable(_)) => Ok(None),
        Err(e) => Err(e),
    }
}
