//! Detection of row-heuristic manipulation.
//!
//! The row heuristic writes `c_pj = alpha · c_qj`, so after it runs the
//! cross-row ratios `c_pk / c_qk` share one value `alpha > 1` over every
//! modified column. Untouched inconsistent matrices almost never repeat a
//! ratio, which makes repeated ratios above one a usable signal.

use serde::{Deserialize, Serialize};

use crate::consistency::consistency_index;
use crate::error::Result;
use crate::matrix::PcMatrix;

/// Default relative tolerance for "equal" ratios.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Matrices with CI at or below this value are not examined: in a
/// consistent matrix every cross-row ratio repeats.
pub const CI_GATE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suspect {
    /// Row suspected of being promoted (0-based).
    pub promoted: usize,
    /// Row whose entries were scaled into it.
    pub reference: usize,
    /// Columns `k` sharing the ratio, ascending.
    pub witnesses: Vec<usize>,
    pub common_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub suspects: Vec<Suspect>,
    pub tolerance: f64,
    pub ci: f64,
    /// True when the CI gate suppressed the scan.
    pub gated: bool,
}

impl DetectionReport {
    pub fn flags(&self, promoted: usize, reference: usize) -> bool {
        self.suspects
            .iter()
            .any(|s| s.promoted == promoted && s.reference == reference)
    }
}

/// Scans every ordered row pair `(i, j)` for two or more columns
/// `k ∉ {i, j}` whose ratios `c_ik / c_jk` exceed one and agree within the
/// relative tolerance `tol`. Suspects are ordered by `(i, j)`.
pub fn detect_row_manipulation(c: &PcMatrix, tol: f64) -> Result<DetectionReport> {
    let ci = consistency_index(c)?;
    if ci <= CI_GATE {
        return Ok(DetectionReport {
            suspects: Vec::new(),
            tolerance: tol,
            ci,
            gated: true,
        });
    }
    let n = c.n();
    let mut suspects = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                scan_pair(c, i, j, tol, &mut suspects);
            }
        }
    }
    Ok(DetectionReport {
        suspects,
        tolerance: tol,
        ci,
        gated: false,
    })
}

fn scan_pair(c: &PcMatrix, i: usize, j: usize, tol: f64, out: &mut Vec<Suspect>) {
    let mut ratios: Vec<(f64, usize)> = (0..c.n())
        .filter(|&k| k != i && k != j)
        .map(|k| (c.get(i, k) / c.get(j, k), k))
        .filter(|&(r, _)| r > 1.0)
        .collect();
    ratios.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // Greedy clusters anchored at their smallest ratio; sorted order makes
    // the anchor check cover every pair in the cluster.
    let mut start = 0;
    while start < ratios.len() {
        let anchor = ratios[start].0;
        let mut end = start + 1;
        while end < ratios.len() && ratios[end].0 - anchor <= tol * ratios[end].0 {
            end += 1;
        }
        if end - start >= 2 {
            let group = &ratios[start..end];
            let common_ratio = group.iter().map(|r| r.0).sum::<f64>() / group.len() as f64;
            let mut witnesses: Vec<usize> = group.iter().map(|r| r.1).collect();
            witnesses.sort_unstable();
            out.push(Suspect {
                promoted: i,
                reference: j,
                witnesses,
                common_ratio,
            });
        }
        start = end;
    }
}
