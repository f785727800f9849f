//! Rank-manipulation heuristics.
//!
//! Both heuristics take a matrix `C`, a change factor `alpha > 1` and two
//! alternatives `p`, `q` with `r(a_p) < r(a_q)`, and overwrite reciprocal
//! pairs of `C` one at a time until `r(a_p) > r(a_q)`:
//!
//! - the row heuristic sets `c_pq = alpha`, then walks the rest of row `p`
//!   in ascending order of value, setting `c_pj = alpha · c_qj`;
//! - the matrix heuristic builds a consistent target from the priority
//!   vector with `w_p` replaced by `alpha · w_q`, and copies target entries
//!   into `C` starting with the ones farthest from it.
//!
//! [`find_m`] sweeps `alpha` and keeps the cheapest outcome. All indices in
//! this module are 0-based.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::consistency::{ci_from_lambda, ACCEPTABLE};
use crate::error::{Error, Result};
use crate::matrix::{hadamard_distance, PcMatrix, SCALE_MAX, SCALE_MIN};
use crate::priority::{derive, derive_evm, Method, PriorityVector, EVM_MAX_ITER, EVM_TOL};

/// Margin below which a swept `alpha` counts as reaching one.
const ALPHA_FLOOR_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Row,
    Matrix,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::Row, Algorithm::Matrix];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Row => "row",
            Algorithm::Matrix => "matrix",
        }
    }

    /// Initial `m_res` in the sweep: `2n` for row, `n²` for matrix.
    pub fn sentinel(self, n: usize) -> usize {
        match self {
            Algorithm::Row => 2 * n,
            Algorithm::Matrix => n * n,
        }
    }

    /// Largest number of entries the heuristic can modify.
    pub fn max_modified(self, n: usize) -> usize {
        match self {
            Algorithm::Row => 2 * (n - 1),
            Algorithm::Matrix => n * (n - 1),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "row" => Ok(Algorithm::Row),
            "matrix" => Ok(Algorithm::Matrix),
            other => Err(format!("unknown algorithm `{other}` (expected row or matrix)")),
        }
    }
}

/// How [`find_m`] ranks the candidates produced by the `alpha` sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Candidates that swap the ranks within the CI threshold beat all
    /// others; then fewest modified entries, lower CI, larger `alpha`.
    #[default]
    Feasible,
    /// Fewest modified entries first; CI only breaks ties.
    Fewest,
}

/// What happens to new entries outside `[1/9, 9]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    /// Keep the value and report the position.
    #[default]
    Free,
    /// Saturate at the scale bound; the partner gets the reciprocal.
    Clamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipulationRequest {
    /// Alternative to promote.
    pub p: usize,
    /// Alternative to demote.
    pub q: usize,
    pub algorithm: Algorithm,
    pub method: Method,
    pub alpha_start: f64,
    pub alpha_step: f64,
    pub ci_threshold: f64,
    pub scale: ScaleMode,
    /// Additionally require `alpha > c_pq`.
    pub strict_alpha: bool,
    pub selection: Selection,
}

impl ManipulationRequest {
    pub fn new(p: usize, q: usize, algorithm: Algorithm, method: Method) -> Self {
        Self {
            p,
            q,
            algorithm,
            method,
            alpha_start: SCALE_MAX,
            alpha_step: 0.1,
            ci_threshold: ACCEPTABLE,
            scale: ScaleMode::Free,
            strict_alpha: false,
            selection: Selection::Feasible,
        }
    }

    pub fn with_alpha(mut self, start: f64, step: f64) -> Self {
        self.alpha_start = start;
        self.alpha_step = step;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_indices(self.p, self.q, n)?;
        if !(self.alpha_start > 1.0) {
            return Err(Error::AlphaOutOfRange {
                alpha: self.alpha_start,
                bound: 1.0,
            });
        }
        if !(self.alpha_step > 0.0) {
            return Err(Error::InvalidRequest(format!(
                "alpha_step must be positive, got {}",
                self.alpha_step
            )));
        }
        if !(self.ci_threshold > 0.0) {
            return Err(Error::InvalidRequest(format!(
                "ci_threshold must be positive, got {}",
                self.ci_threshold
            )));
        }
        Ok(())
    }

    /// The `alpha` values visited by the sweep, largest first.
    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        (0u64..)
            .map(move |k| self.alpha_start - k as f64 * self.alpha_step)
            .take_while(|&a| a > 1.0 + ALPHA_FLOOR_EPS)
    }
}

fn check_indices(p: usize, q: usize, n: usize) -> Result<()> {
    if p == q || p >= n || q >= n {
        return Err(Error::InvalidIndices { p, q, n });
    }
    Ok(())
}

/// One pair overwrite inside a heuristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub pair: (usize, usize),
    /// New `(c_ij, c_ji)`.
    pub values: (f64, f64),
    pub weights: PriorityVector,
    pub ci: f64,
    /// `(r(a_p), r(a_q))` after the step.
    pub ranks: (usize, usize),
    pub clamped: bool,
}

/// Output of a single heuristic run at a fixed `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct Changes {
    /// Modified entries, both members of each pair counted.
    pub m_res: usize,
    pub matrix: PcMatrix,
    pub trace: Vec<StepRecord>,
    /// Pairs whose new value fell outside the scale (before clamping).
    pub out_of_scale: Vec<(usize, usize)>,
    /// Priorities of the returned matrix.
    pub weights: PriorityVector,
    pub ci: f64,
}

impl Changes {
    /// Whether `r(a_p) > r(a_q)` holds for the returned matrix.
    pub fn swapped(&self, p: usize, q: usize) -> bool {
        let r = self.weights.ranking();
        r.position(p) > r.position(q)
    }
}

/// Priorities and CI for one matrix state.
struct Evaluation {
    weights: PriorityVector,
    ci: f64,
}

fn evaluate(c: &PcMatrix, method: Method) -> Result<Evaluation> {
    let evm = derive_evm(c, EVM_TOL, EVM_MAX_ITER)?;
    let ci = ci_from_lambda(evm.lambda_max.unwrap_or(c.n() as f64), c.n());
    let weights = match method {
        Method::Evm => evm,
        Method::Gmm => derive(c, Method::Gmm)?,
    };
    Ok(Evaluation { weights, ci })
}

/// Accumulates pair overwrites together with their trace.
struct Recorder {
    matrix: PcMatrix,
    method: Method,
    scale: ScaleMode,
    p: usize,
    q: usize,
    current: Evaluation,
    trace: Vec<StepRecord>,
    out_of_scale: Vec<(usize, usize)>,
}

impl Recorder {
    fn new(c: &PcMatrix, method: Method, scale: ScaleMode, p: usize, q: usize) -> Result<Self> {
        Ok(Self {
            matrix: c.clone(),
            method,
            scale,
            p,
            q,
            current: evaluate(c, method)?,
            trace: Vec::new(),
            out_of_scale: Vec::new(),
        })
    }

    fn with_evaluation(c: &PcMatrix, method: Method, scale: ScaleMode, p: usize, q: usize, current: Evaluation) -> Self {
        Self {
            matrix: c.clone(),
            method,
            scale,
            p,
            q,
            current,
            trace: Vec::new(),
            out_of_scale: Vec::new(),
        }
    }

    fn goal_reached(&self) -> bool {
        let r = self.current.weights.ranking();
        r.position(self.p) > r.position(self.q)
    }

    fn apply(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let in_scale = (SCALE_MIN..=SCALE_MAX).contains(&value);
        let mut clamped = false;
        let value = if in_scale {
            value
        } else {
            self.out_of_scale.push((i, j));
            match self.scale {
                ScaleMode::Free => value,
                ScaleMode::Clamp => {
                    clamped = true;
                    value.clamp(SCALE_MIN, SCALE_MAX)
                }
            }
        };
        self.matrix.set_pair(i, j, value);
        self.current = evaluate(&self.matrix, self.method)?;
        let r = self.current.weights.ranking();
        self.trace.push(StepRecord {
            pair: (i, j),
            values: (self.matrix.get(i, j), self.matrix.get(j, i)),
            weights: self.current.weights.clone(),
            ci: self.current.ci,
            ranks: (r.position(self.p), r.position(self.q)),
            clamped,
        });
        Ok(())
    }

    fn finish(self) -> Changes {
        Changes {
            m_res: 2 * self.trace.len(),
            matrix: self.matrix,
            trace: self.trace,
            out_of_scale: self.out_of_scale,
            weights: self.current.weights,
            ci: self.current.ci,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::AlphaOutOfRange { alpha, bound: 1.0 });
    }
    Ok(())
}

/// Columns of row `p` other than `p` and `q`, ascending by value with ties
/// broken by column index.
pub fn row_order(c: &PcMatrix, p: usize, q: usize) -> Vec<usize> {
    let mut cols: Vec<usize> = (0..c.n()).filter(|&j| j != p && j != q).collect();
    cols.sort_by(|&a, &b| c.get(p, a).total_cmp(&c.get(p, b)).then(a.cmp(&b)));
    cols
}

/// Row heuristic at a fixed `alpha`.
pub fn row_compute_changes(
    c: &PcMatrix,
    alpha: f64,
    p: usize,
    q: usize,
    method: Method,
    scale: ScaleMode,
) -> Result<Changes> {
    check_indices(p, q, c.n())?;
    check_alpha(alpha)?;
    // The row order ignores c_pq, so it can be taken from the input.
    let order = row_order(c, p, q);
    let mut rec = Recorder::new(c, method, scale, p, q)?;
    rec.apply(p, q, alpha)?;
    for j in order {
        if rec.goal_reached() {
            break;
        }
        let value = alpha * rec.matrix.get(q, j);
        rec.apply(p, j, value)?;
    }
    Ok(rec.finish())
}

/// `h_ij` must exceed `1 + H_MARGIN` to count as a disagreement. Entries
/// within the margin already agree with the target up to rounding.
pub const H_MARGIN: f64 = 1e-9;

/// One candidate position for the matrix heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub i: usize,
    pub j: usize,
    pub h: f64,
}

/// Everything the matrix heuristic derives before its loop.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPlan {
    pub weights: PriorityVector,
    /// Priorities with `w_p` replaced by `alpha · w_q` (not renormalized).
    pub target_weights: Vec<f64>,
    pub target: PcMatrix,
    pub hadamard: Vec<Vec<f64>>,
    /// Entries with `h_ij > 1 + H_MARGIN`, largest first, ties by `(i, j)`.
    pub respos: Vec<Distance>,
}

pub fn matrix_plan(c: &PcMatrix, alpha: f64, p: usize, q: usize, method: Method) -> Result<MatrixPlan> {
    check_indices(p, q, c.n())?;
    check_alpha(alpha)?;
    let weights = derive(c, method)?;
    plan_from_weights(c, alpha, p, q, weights)
}

fn plan_from_weights(c: &PcMatrix, alpha: f64, p: usize, q: usize, weights: PriorityVector) -> Result<MatrixPlan> {
    let mut target_weights = weights.weights.clone();
    target_weights[p] = alpha * weights.weights[q];
    let target = PcMatrix::consistent_from_weights(&target_weights)?;
    let hadamard = hadamard_distance(c, &target)?;
    let mut respos: Vec<Distance> = hadamard
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|&(_, &h)| h > 1.0 + H_MARGIN)
                .map(move |(j, &h)| Distance { i, j, h })
        })
        .collect();
    respos.sort_by(|a, b| b.h.total_cmp(&a.h).then((a.i, a.j).cmp(&(b.i, b.j))));
    Ok(MatrixPlan {
        weights,
        target_weights,
        target,
        hadamard,
        respos,
    })
}

/// Matrix heuristic at a fixed `alpha`.
pub fn matrix_compute_changes(
    c: &PcMatrix,
    alpha: f64,
    p: usize,
    q: usize,
    method: Method,
    scale: ScaleMode,
) -> Result<Changes> {
    check_indices(p, q, c.n())?;
    check_alpha(alpha)?;
    let initial = evaluate(c, method)?;
    let plan = plan_from_weights(c, alpha, p, q, initial.weights.clone())?;
    let mut rec = Recorder::with_evaluation(c, method, scale, p, q, initial);
    for d in &plan.respos {
        if rec.goal_reached() {
            break;
        }
        rec.apply(d.i, d.j, plan.target.get(d.i, d.j))?;
    }
    Ok(rec.finish())
}

pub fn compute_changes(
    c: &PcMatrix,
    alpha: f64,
    p: usize,
    q: usize,
    algorithm: Algorithm,
    method: Method,
    scale: ScaleMode,
) -> Result<Changes> {
    match algorithm {
        Algorithm::Row => row_compute_changes(c, alpha, p, q, method, scale),
        Algorithm::Matrix => matrix_compute_changes(c, alpha, p, q, method, scale),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Failure {
    /// No swept `alpha` produced `r(a_p) > r(a_q)`.
    NoSwapAchieved,
    /// The swap happened but the result is too inconsistent.
    TooInconsistent,
}

struct Candidate {
    m_res: usize,
    ci: f64,
    swapped: bool,
    feasible: bool,
}

impl Candidate {
    fn new(ch: &Changes, swapped: bool, ci_threshold: f64) -> Self {
        Self {
            m_res: ch.m_res,
            ci: ch.ci,
            swapped,
            feasible: swapped && ch.ci <= ci_threshold,
        }
    }

    /// Strict improvement over `other`; equal candidates keep the earlier
    /// (larger) `alpha`.
    fn beats(&self, other: &Candidate, selection: Selection) -> bool {
        use std::cmp::Ordering::*;
        if selection == Selection::Feasible && self.feasible != other.feasible {
            return self.feasible;
        }
        match self.m_res.cmp(&other.m_res) {
            Less => true,
            Greater => false,
            Equal if self.swapped != other.swapped => self.swapped,
            Equal => self.ci < other.ci,
        }
    }
}

/// Summary of one `alpha` visited by the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub m_res: usize,
    pub ci: f64,
    pub swapped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManipulationResult {
    pub matrix: PcMatrix,
    pub m_res: usize,
    /// Modified comparisons, one unit each.
    pub cost: usize,
    pub swapped: bool,
    /// Swap achieved and `final_ci <= ci_threshold`.
    pub success: bool,
    pub failure: Option<Failure>,
    pub final_ci: f64,
    pub weights: PriorityVector,
    /// `None` when the input already satisfied the goal.
    pub alpha_used: Option<f64>,
    pub trace: Vec<StepRecord>,
    pub out_of_scale: Vec<(usize, usize)>,
    pub sweep: Vec<SweepPoint>,
}

/// Sweeps `alpha` from `alpha_start` down by `alpha_step` while it exceeds
/// one and keeps the best run according to `request.selection`. Under
/// [`Selection::Fewest`] that is the run with the fewest modified entries;
/// among equal counts a run that achieves the swap wins, then the lower CI,
/// then the larger `alpha`. [`Selection::Feasible`] applies the same order
/// after putting runs that swap within the CI threshold first.
pub fn find_m(c: &PcMatrix, request: &ManipulationRequest) -> Result<ManipulationResult> {
    let n = c.n();
    request.validate(n)?;
    let (p, q) = (request.p, request.q);

    let initial = evaluate(c, request.method)?;
    let ranks = initial.weights.ranking();
    if ranks.position(p) > ranks.position(q) {
        let success = initial.ci <= request.ci_threshold;
        return Ok(ManipulationResult {
            matrix: c.clone(),
            m_res: 0,
            cost: 0,
            swapped: true,
            success,
            failure: (!success).then_some(Failure::TooInconsistent),
            final_ci: initial.ci,
            weights: initial.weights,
            alpha_used: None,
            trace: Vec::new(),
            out_of_scale: Vec::new(),
            sweep: Vec::new(),
        });
    }

    let mut best_m = request.algorithm.sentinel(n);
    let mut best: Option<(f64, bool, Changes)> = None;
    let mut sweep = Vec::new();
    for alpha in request.alphas() {
        if request.strict_alpha && alpha <= c.get(p, q) {
            continue;
        }
        let changes = compute_changes(c, alpha, p, q, request.algorithm, request.method, request.scale)?;
        let swapped = changes.swapped(p, q);
        sweep.push(SweepPoint {
            alpha,
            m_res: changes.m_res,
            ci: changes.ci,
            swapped,
        });
        let better = match &best {
            None => changes.m_res < best_m,
            Some((_, best_swapped, b)) => {
                let cand = Candidate::new(&changes, swapped, request.ci_threshold);
                let inc = Candidate::new(b, *best_swapped, request.ci_threshold);
                cand.beats(&inc, request.selection)
            }
        };
        if better {
            best_m = changes.m_res;
            best = Some((alpha, swapped, changes));
        }
    }

    Ok(match best {
        Some((alpha, swapped, changes)) => {
            let success = swapped && changes.ci <= request.ci_threshold;
            let failure = if !swapped {
                Some(Failure::NoSwapAchieved)
            } else if !success {
                Some(Failure::TooInconsistent)
            } else {
                None
            };
            ManipulationResult {
                m_res: changes.m_res,
                cost: changes.m_res / 2,
                swapped,
                success,
                failure,
                final_ci: changes.ci,
                weights: changes.weights,
                alpha_used: Some(alpha),
                matrix: changes.matrix,
                trace: changes.trace,
                out_of_scale: changes.out_of_scale,
                sweep,
            }
        }
        None => ManipulationResult {
            matrix: c.clone(),
            m_res: 0,
            cost: 0,
            swapped: false,
            success: false,
            failure: Some(Failure::NoSwapAchieved),
            final_ci: initial.ci,
            weights: initial.weights,
            alpha_used: None,
            trace: Vec::new(),
            out_of_scale: Vec::new(),
            sweep,
        },
    })
}
