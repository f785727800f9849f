//! Random PC matrices and the success-rate experiment harness.
//!
//! Every random draw comes from a ChaCha stream keyed by
//! `(seed, bucket, trial)`, so corpora and statistics do not depend on how
//! trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consistency::{consistency, consistency_index, RandomIndexTable, ACCEPTABLE};
use crate::error::{Error, Result};
use crate::manip::{find_m, Algorithm, ManipulationRequest, ScaleMode, Selection};
use crate::matrix::{PcMatrix, SCALE_MAX};
use crate::priority::{derive, Method, Ranking};

/// Accepted matrix with its `d`, and the attempts spent.
type Accepted = (Option<(PcMatrix, f64)>, u64);

/// Attempts allowed per bucket while filling a corpus.
pub const BUCKET_BUDGET: u64 = 1_000_000;
/// Attempts per round of the disturbance-factor search.
const PILOT_BATCH: u64 = 200;
/// Hit rate at which the disturbance-factor search stops.
const PILOT_HIT_RATE: f64 = 0.01;
const PILOT_ROUNDS: u32 = 60;
const PILOT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationConfig {
    pub n: usize,
    /// Disturbance factor: entries are multiplied by a draw from `[1/d, d]`.
    pub d: f64,
    pub weight_range: (f64, f64),
    /// CR acceptance threshold; `None` accepts every draw.
    pub acceptance: Option<f64>,
    pub max_attempts: u64,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            n: 5,
            d: 1.5,
            weight_range: (1.0 / 15.0, 15.0),
            acceptance: Some(ACCEPTABLE),
            max_attempts: 100_000,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooSmall(self.n));
        }
        if !(self.d >= 1.0 && self.d.is_finite()) {
            return Err(range("d", format!("must be >= 1, got {}", self.d)));
        }
        let (lo, hi) = self.weight_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(range("weight_range", format!("invalid range ({lo}, {hi})")));
        }
        if let Some(a) = self.acceptance {
            if !(a > 0.0) {
                return Err(range("acceptance", format!("must be positive, got {a}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n: usize,
    pub algorithms: Vec<Algorithm>,
    pub methods: Vec<Method>,
    pub bucket_width: f64,
    pub bucket_count: usize,
    pub trials_per_bucket: usize,
    pub delta_pq: usize,
    pub ci_threshold: f64,
    pub alpha_start: f64,
    pub alpha_step: f64,
    pub selection: Selection,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 5,
            algorithms: Algorithm::ALL.to_vec(),
            methods: vec![Method::Evm],
            bucket_width: 0.005,
            bucket_count: 20,
            trials_per_bucket: 200,
            delta_pq: 1,
            ci_threshold: ACCEPTABLE,
            alpha_start: SCALE_MAX,
            alpha_step: 0.1,
            selection: Selection::Feasible,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(range("n", format!("must be >= 2, got {}", self.n)));
        }
        if self.delta_pq < 1 || self.delta_pq > self.n - 1 {
            return Err(range("delta_pq", format!("must be in 1..={}, got {}", self.n - 1, self.delta_pq)));
        }
        if !(self.bucket_width > 0.0) {
            return Err(range("bucket_width", "must be positive".into()));
        }
        if !(self.ci_threshold > 0.0) {
            return Err(range("ci_threshold", "must be positive".into()));
        }
        if !(self.alpha_start > 1.0) {
            return Err(range("alpha_start", "must exceed 1".into()));
        }
        if !(self.alpha_step > 0.0) {
            return Err(range("alpha_step", "must be positive".into()));
        }
        if self.algorithms.is_empty() {
            return Err(range("algorithms", "must not be empty".into()));
        }
        if self.methods.is_empty() {
            return Err(range("methods", "must not be empty".into()));
        }
        Ok(())
    }

    pub fn bucket_bounds(&self, k: usize) -> (f64, f64) {
        (k as f64 * self.bucket_width, (k + 1) as f64 * self.bucket_width)
    }
}

fn range(name: &str, message: String) -> Error {
    Error::Range {
        name: name.to_string(),
        message,
    }
}

/// SplitMix64 finalizer, used to key independent streams.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG for trial `trial` of bucket `bucket`.
pub fn stream(seed: u64, bucket: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix(mix(seed) ^ bucket) ^ trial))
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// One disturbed matrix, without the acceptance gate.
pub fn draw_disturbed<R: Rng + ?Sized>(n: usize, d: f64, weight_range: (f64, f64), rng: &mut R) -> Result<PcMatrix> {
    let weights: Vec<f64> = (0..n)
        .map(|_| log_uniform(rng, weight_range.0, weight_range.1))
        .collect();
    let mut c = PcMatrix::consistent_from_weights(&weights)?;
    if d > 1.0 {
        for i in 0..n {
            for j in (i + 1)..n {
                let delta = log_uniform(rng, 1.0 / d, d);
                let v = c.get(i, j) * delta;
                c.set_pair(i, j, v);
            }
        }
    }
    Ok(c)
}

/// Draws disturbed matrices until one passes the CR gate.
pub fn generate_disturbed<R: Rng + ?Sized>(cfg: &GenerationConfig, rng: &mut R) -> Result<PcMatrix> {
    cfg.validate()?;
    let table = RandomIndexTable::saaty();
    for _ in 0..cfg.max_attempts {
        let c = draw_disturbed(cfg.n, cfg.d, cfg.weight_range, rng)?;
        match cfg.acceptance {
            None => return Ok(c),
            Some(limit) => {
                if consistency(&c, &table)?.cr < limit {
                    return Ok(c);
                }
            }
        }
    }
    Err(Error::GenerationBudgetExceeded {
        attempts: cfg.max_attempts,
    })
}

/// Matrices whose CI falls in `[ci_low, ci_high)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    pub index: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Disturbance factor chosen for this bucket.
    pub d: f64,
    pub matrices: Vec<PcMatrix>,
    pub cis: Vec<f64>,
    pub attempts: u64,
    pub error: Option<Error>,
}

fn accepts(ci: f64, low: f64, high: f64) -> bool {
    let ci = ci.max(0.0);
    ci >= low && ci < high
}

enum Draw {
    Hit(PcMatrix, f64),
    Below,
    Above,
}

fn draw_for_bucket(
    gen: &GenerationConfig,
    d: f64,
    low: f64,
    high: f64,
    table: &RandomIndexTable,
    rng: &mut ChaCha8Rng,
) -> Result<Draw> {
    let c = draw_disturbed(gen.n, d, gen.weight_range, rng)?;
    let report = consistency(&c, table);
    let (ci, cr) = match report {
        Ok(r) => (r.ci, Some(r.cr)),
        Err(Error::RandomIndexUnavailable(_)) => (consistency_index(&c)?, None),
        Err(e) => return Err(e),
    };
    if let (Some(limit), Some(cr)) = (gen.acceptance, cr) {
        if cr >= limit {
            return Ok(Draw::Above);
        }
    }
    Ok(if accepts(ci, low, high) {
        Draw::Hit(c, ci)
    } else if ci.max(0.0) < low {
        Draw::Below
    } else {
        Draw::Above
    })
}

/// Searches for a disturbance factor that lands in the bucket at least 1%
/// of the time, starting from `1 + 4 · midpoint`.
fn pilot_d(gen: &GenerationConfig, k: usize, low: f64, high: f64, table: &RandomIndexTable) -> Result<(f64, u64)> {
    let mut rng = stream(gen.seed, k as u64, PILOT_STREAM);
    let mut d = 1.0 + 4.0 * (low + high) / 2.0;
    let mut attempts = 0;
    for _ in 0..PILOT_ROUNDS {
        let (mut hits, mut below, mut above) = (0u64, 0u64, 0u64);
        for _ in 0..PILOT_BATCH {
            match draw_for_bucket(gen, d, low, high, table, &mut rng)? {
                Draw::Hit(..) => hits += 1,
                Draw::Below => below += 1,
                Draw::Above => above += 1,
            }
        }
        attempts += PILOT_BATCH;
        if hits as f64 >= PILOT_HIT_RATE * PILOT_BATCH as f64 {
            return Ok((d, attempts));
        }
        let excess = d - 1.0;
        d = if below > above { 1.0 + excess * 1.5 } else { 1.0 + excess / 1.5 };
    }
    Err(Error::GenerationBudgetExceeded { attempts })
}

/// Rejection-samples `trials_per_bucket` matrices into each CI bucket.
/// Buckets that cannot be filled carry an error and keep the matrices
/// found so far.
pub fn fill_buckets(cfg: &ExperimentConfig, gen: &GenerationConfig) -> Result<Vec<Bucket>> {
    cfg.validate()?;
    gen.validate()?;
    let gen = GenerationConfig {
        n: cfg.n,
        seed: cfg.seed,
        ..gen.clone()
    };
    let table = RandomIndexTable::saaty();
    (0..cfg.bucket_count)
        .map(|k| fill_bucket(cfg, &gen, k, &table))
        .collect()
}

fn fill_bucket(cfg: &ExperimentConfig, gen: &GenerationConfig, k: usize, table: &RandomIndexTable) -> Result<Bucket> {
    let (low, high) = cfg.bucket_bounds(k);
    let mut bucket = Bucket {
        index: k,
        ci_low: low,
        ci_high: high,
        d: f64::NAN,
        matrices: Vec::new(),
        cis: Vec::new(),
        attempts: 0,
        error: None,
    };
    if cfg.trials_per_bucket == 0 {
        return Ok(bucket);
    }
    let (d, pilot_attempts) = match pilot_d(gen, k, low, high, table) {
        Ok(v) => v,
        Err(Error::GenerationBudgetExceeded { attempts }) => {
            bucket.attempts = attempts;
            bucket.error = Some(Error::GenerationBudgetExceeded { attempts });
            return Ok(bucket);
        }
        Err(e) => return Err(e),
    };
    bucket.d = d;
    let per_trial = (BUCKET_BUDGET.saturating_sub(pilot_attempts) / cfg.trials_per_bucket as u64).max(1);

    let draws: Vec<Result<Accepted>> = (0..cfg.trials_per_bucket)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(gen.seed, k as u64, t as u64);
            for attempt in 1..=per_trial {
                if let Draw::Hit(c, ci) = draw_for_bucket(gen, d, low, high, table, &mut rng)? {
                    return Ok((Some((c, ci)), attempt));
                }
            }
            Ok((None, per_trial))
        })
        .collect();

    bucket.attempts = pilot_attempts;
    let mut missing = 0;
    for draw in draws {
        let (hit, attempts) = draw?;
        bucket.attempts += attempts;
        match hit {
            Some((c, ci)) => {
                bucket.matrices.push(c);
                bucket.cis.push(ci);
            }
            None => missing += 1,
        }
    }
    if missing > 0 {
        bucket.error = Some(Error::GenerationBudgetExceeded {
            attempts: bucket.attempts,
        });
    }
    Ok(bucket)
}

/// Promotes the alternative at position 1 over the one `delta_pq`
/// positions above it. Returns 0-based `(p, q)`.
pub fn select_pq(ranking: &Ranking, delta_pq: usize) -> Result<(usize, usize)> {
    let n = ranking.len();
    if delta_pq < 1 || delta_pq >= n {
        return Err(range("delta_pq", format!("must be in 1..={}, got {delta_pq}", n.saturating_sub(1))));
    }
    let p = ranking.at_position(1).expect("ranking is a permutation");
    let q = ranking.at_position(1 + delta_pq).expect("ranking is a permutation");
    Ok((p, q))
}

/// Outcome of one manipulation attempt inside an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub bucket: usize,
    pub trial: usize,
    pub algorithm: Algorithm,
    pub method: Method,
    pub p: usize,
    pub q: usize,
    pub input_ci: f64,
    pub m_res: usize,
    pub success: bool,
    pub result: PcMatrix,
}

/// Runs `find_m` for every corpus matrix and every configured
/// (method, algorithm). Output order: bucket, trial, method, algorithm.
pub fn run_trials(cfg: &ExperimentConfig, buckets: &[Bucket]) -> Result<Vec<TrialOutcome>> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize, &PcMatrix, f64)> = buckets
        .iter()
        .flat_map(|b| {
            b.matrices
                .iter()
                .zip(&b.cis)
                .enumerate()
                .map(move |(t, (c, &ci))| (b.index, t, c, ci))
        })
        .collect();
    let per_job: Vec<Result<Vec<TrialOutcome>>> = jobs
        .into_par_iter()
        .map(|(bucket, trial, c, input_ci)| {
            let mut out = Vec::new();
            for &method in &cfg.methods {
                let ranking = derive(c, method)?.ranking();
                let (p, q) = select_pq(&ranking, cfg.delta_pq)?;
                for &algorithm in &cfg.algorithms {
                    let request = ManipulationRequest {
                        p,
                        q,
                        algorithm,
                        method,
                        alpha_start: cfg.alpha_start,
                        alpha_step: cfg.alpha_step,
                        ci_threshold: cfg.ci_threshold,
                        scale: ScaleMode::Free,
                        strict_alpha: false,
                        selection: cfg.selection,
                    };
                    let res = find_m(c, &request)?;
                    out.push(TrialOutcome {
                        bucket,
                        trial,
                        algorithm,
                        method,
                        p,
                        q,
                        input_ci,
                        m_res: res.m_res,
                        success: res.success,
                        result: res.matrix,
                    });
                }
            }
            Ok(out)
        })
        .collect();
    let mut outcomes = Vec::new();
    for r in per_job {
        outcomes.extend(r?);
    }
    Ok(outcomes)
}

/// Aggregates for one (bucket, algorithm, method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketStats {
    pub n: usize,
    pub algorithm: Algorithm,
    pub method: Method,
    pub delta_pq: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
    pub successes: usize,
    pub sr: f64,
    pub mean_m_res: f64,
    /// Generation problem for this bucket, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Per-bucket SR and mean `m_res`, ordered by bucket, algorithm, method.
pub fn aggregate(cfg: &ExperimentConfig, buckets: &[Bucket], outcomes: &[TrialOutcome]) -> Vec<BucketStats> {
    let mut stats = Vec::new();
    for b in buckets {
        for &algorithm in &cfg.algorithms {
            for &method in &cfg.methods {
                let sel: Vec<&TrialOutcome> = outcomes
                    .iter()
                    .filter(|o| o.bucket == b.index && o.algorithm == algorithm && o.method == method)
                    .collect();
                if sel.is_empty() {
                    continue;
                }
                let trials = sel.len();
                let successes = sel.iter().filter(|o| o.success).count();
                let total_m: usize = sel.iter().map(|o| o.m_res).sum();
                stats.push(BucketStats {
                    n: cfg.n,
                    algorithm,
                    method,
                    delta_pq: cfg.delta_pq,
                    ci_low: b.ci_low,
                    ci_high: b.ci_high,
                    trials,
                    successes,
                    sr: successes as f64 / trials as f64,
                    mean_m_res: total_m as f64 / trials as f64,
                    note: b.error.as_ref().map(ToString::to_string),
                });
            }
        }
    }
    stats
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub stats: Vec<BucketStats>,
    /// Buckets that could not be filled, with the reason.
    pub bucket_errors: Vec<(usize, Error)>,
}

pub fn run_experiment(cfg: &ExperimentConfig, gen: &GenerationConfig) -> Result<ExperimentReport> {
    let buckets = fill_buckets(cfg, gen)?;
    let outcomes = run_trials(cfg, &buckets)?;
    Ok(ExperimentReport {
        stats: aggregate(cfg, &buckets, &outcomes),
        bucket_errors: buckets
            .iter()
            .filter_map(|b| b.error.clone().map(|e| (b.index, e)))
            .collect(),
    })
}
