//! Priority vectors (EVM and GMM) and the ranking function built on them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::PcMatrix;

/// Default convergence threshold on successive normalized iterates.
pub const EVM_TOL: f64 = 1e-12;
/// Default power-iteration budget.
pub const EVM_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Principal eigenvector.
    Evm,
    /// Row geometric means.
    Gmm,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Evm, Method::Gmm];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Evm => "evm",
            Method::Gmm => "gmm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "evm" => Ok(Method::Evm),
            "gmm" => Ok(Method::Gmm),
            other => Err(format!("unknown method `{other}` (expected evm or gmm)")),
        }
    }
}

/// Normalized weights `w(a_i)`, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityVector {
    pub weights: Vec<f64>,
    /// Principal eigenvalue; present only for EVM.
    pub lambda_max: Option<f64>,
    pub method: Method,
}

impl PriorityVector {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn ranking(&self) -> Ranking {
        rank_of(&self.weights)
    }
}

/// Priorities by the configured method with default EVM settings.
pub fn derive(c: &PcMatrix, method: Method) -> Result<PriorityVector> {
    match method {
        Method::Evm => derive_evm(c, EVM_TOL, EVM_MAX_ITER),
        Method::Gmm => Ok(derive_gmm(c)),
    }
}

/// Power iteration from the uniform vector.
///
/// Stops once successive sum-normalized iterates differ by less than `tol`
/// in the max norm. The eigenvalue is read off as `Σ (C w)_i` with `Σ w_i = 1`.
pub fn derive_evm(c: &PcMatrix, tol: f64, max_iter: usize) -> Result<PriorityVector> {
    let n = c.n();
    let mut w = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        for (i, row) in c.rows().enumerate() {
            next[i] = row.iter().zip(&w).map(|(a, b)| a * b).sum();
        }
        let lambda: f64 = next.iter().sum();
        let mut delta = 0.0f64;
        for (x, y) in next.iter_mut().zip(&w) {
            *x /= lambda;
            delta = delta.max((*x - y).abs());
        }
        std::mem::swap(&mut w, &mut next);
        if delta < tol {
            // Eigenvalue estimate at the converged vector.
            let lambda = c
                .rows()
                .map(|row| row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>())
                .sum::<f64>();
            return Ok(PriorityVector {
                weights: w,
                lambda_max: Some(lambda),
                method: Method::Evm,
            });
        }
    }
    Err(Error::NoConvergence(max_iter))
}

/// Row geometric means, computed as exponentiated mean logs.
pub fn derive_gmm(c: &PcMatrix) -> PriorityVector {
    let n = c.n() as f64;
    let logs: Vec<f64> = c
        .rows()
        .map(|row| row.iter().map(|v| v.ln()).sum::<f64>() / n)
        .collect();
    // Shift by the max log so the largest term is exactly one.
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - shift).exp()).collect();
    let total: f64 = raw.iter().sum();
    PriorityVector {
        weights: raw.into_iter().map(|v| v / total).collect(),
        lambda_max: None,
        method: Method::Gmm,
    }
}

/// Ranking positions, 1-based: `positions[i]` is the position of
/// alternative `i`. Position 1 holds the smallest weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    pub positions: Vec<usize>,
}

impl Ranking {
    pub fn position(&self, alternative: usize) -> usize {
        self.positions[alternative]
    }

    /// Alternative (0-based) at the given 1-based position.
    pub fn at_position(&self, position: usize) -> Option<usize> {
        self.positions.iter().position(|&p| p == position)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Assigns positions in ascending weight order; equal weights go to the
/// lower index first.
pub fn rank_of(weights: &[f64]) -> Ranking {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
    let mut positions = vec![0; weights.len()];
    for (pos, &alt) in order.iter().enumerate() {
        positions[alt] = pos + 1;
    }
    Ranking { positions }
}
