//! File formats: headerless CSV and JSON matrices, manipulation results,
//! detection reports, TOML experiment configs and the experiment CSV.
//!
//! Every index written by this module is 1-based.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::detect::DetectionReport;
use crate::error::{Error, Result};
use crate::manip::{ManipulationResult, StepRecord};
use crate::matrix::PcMatrix;
use crate::montecarlo::{BucketStats, ExperimentConfig, GenerationConfig};
use crate::priority::PriorityVector;

/// Significant digits used for numbers in text formats.
pub const SIG_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Json,
}

impl MatrixFormat {
    /// Picks JSON for `.json` paths and CSV otherwise.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => MatrixFormat::Json,
            _ => MatrixFormat::Csv,
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(MatrixFormat::Csv),
            "json" => Ok(MatrixFormat::Json),
            other => Err(format!("unknown matrix format `{other}`")),
        }
    }
}

/// `v` with 12 significant digits in plain decimal notation, trailing zeros
/// trimmed.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (SIG_DIGITS as i32 - 1 - magnitude).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDoc {
    n: usize,
    entries: Vec<Vec<f64>>,
}

pub fn read_matrix<R: Read>(mut source: R, format: MatrixFormat) -> Result<PcMatrix> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    parse_matrix(&text, format)
}

pub fn parse_matrix(text: &str, format: MatrixFormat) -> Result<PcMatrix> {
    match format {
        MatrixFormat::Csv => PcMatrix::from_rows(&parse_grid(text)?),
        MatrixFormat::Json => {
            let doc: MatrixDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
            if doc.entries.len() != doc.n {
                return Err(Error::NotSquare {
                    row: doc.entries.len(),
                    len: doc.entries.len(),
                    expected: doc.n,
                });
            }
            PcMatrix::from_rows(&doc.entries)
        }
    }
}

/// Comma-separated grid of numbers; blank lines are skipped. Line and column
/// numbers in errors are 1-based.
pub fn parse_grid(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(col, field)| {
                let field = field.trim();
                field.parse::<f64>().map_err(|_| Error::Parse {
                    line: ln + 1,
                    column: col + 1,
                    message: format!("not a number: `{field}`"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn matrix_to_csv(m: &PcMatrix) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|&v| format_sig(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_to_json(m: &PcMatrix) -> String {
    let doc = MatrixDoc {
        n: m.n(),
        entries: m.to_rows(),
    };
    serde_json::to_string_pretty(&doc).expect("matrix serializes") + "\n"
}

pub fn write_matrix<W: Write>(m: &PcMatrix, format: MatrixFormat, mut out: W) -> Result<()> {
    let text = match format {
        MatrixFormat::Csv => matrix_to_csv(m),
        MatrixFormat::Json => matrix_to_json(m),
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Grid with fixed decimals, used for traces.
pub fn matrix_to_text(m: &PcMatrix, decimals: usize) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>9.decimals$}")).collect();
        let _ = writeln!(out, "  {}", cells.join(" "));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown output format `{other}`")),
        }
    }
}

pub fn priorities_json(pv: &PriorityVector) -> serde_json::Value {
    json!({
        "method": pv.method,
        "weights": pv.weights,
        "lambda_max": pv.lambda_max,
        "ranks": pv.ranking().positions,
    })
}

pub fn write_priorities(pv: &PriorityVector, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => serde_json::to_string_pretty(&priorities_json(pv)).expect("json") + "\n",
        OutputFormat::Text => {
            let ranks = pv.ranking();
            let mut out = format!("method: {}\n", pv.method);
            if let Some(l) = pv.lambda_max {
                let _ = writeln!(out, "lambda_max: {}", format_sig(l));
            }
            let _ = writeln!(out, "alternative,weight,rank");
            for (i, w) in pv.weights.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", i + 1, format_sig(*w), ranks.position(i));
            }
            out
        }
    }
}

fn step_json(s: &StepRecord) -> serde_json::Value {
    json!({
        "pair": [s.pair.0 + 1, s.pair.1 + 1],
        "values": [s.values.0, s.values.1],
        "weights": s.weights.weights,
        "ci": s.ci,
        "rank_p": s.ranks.0,
        "rank_q": s.ranks.1,
        "clamped": s.clamped,
    })
}

/// Matrices after each step, replayed from the input.
pub fn step_matrices(input: &PcMatrix, trace: &[StepRecord]) -> Vec<PcMatrix> {
    let mut m = input.clone();
    trace
        .iter()
        .map(|s| {
            m.set_pair(s.pair.0, s.pair.1, s.values.0);
            m.clone()
        })
        .collect()
}

/// Serializes a manipulation result. `input` is needed only when
/// `with_matrices` asks for the per-step matrices.
pub fn write_result(
    result: &ManipulationResult,
    input: &PcMatrix,
    p: usize,
    q: usize,
    format: OutputFormat,
    with_matrices: bool,
) -> String {
    let matrices = if with_matrices {
        step_matrices(input, &result.trace)
    } else {
        Vec::new()
    };
    match format {
        OutputFormat::Json => {
            let trace: Vec<serde_json::Value> = result
                .trace
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let mut v = step_json(s);
                    if let Some(m) = matrices.get(k) {
                        v["matrix"] = json!(m.to_rows());
                    }
                    v
                })
                .collect();
            let doc = json!({
                "p": p + 1,
                "q": q + 1,
                "m_res": result.m_res,
                "cost": result.cost,
                "swapped": result.swapped,
                "success": result.success,
                "failure": result.failure,
                "final_ci": result.final_ci,
                "alpha_used": result.alpha_used,
                "weights": result.weights.weights,
                "ranks": result.weights.ranking().positions,
                "matrix": result.matrix.to_rows(),
                "out_of_scale": result.out_of_scale.iter().map(|&(i, j)| [i + 1, j + 1]).collect::<Vec<_>>(),
                "trace": trace,
            });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        OutputFormat::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "p: {}", p + 1);
            let _ = writeln!(out, "q: {}", q + 1);
            match result.alpha_used {
                Some(a) => {
                    let _ = writeln!(out, "alpha: {}", format_sig(a));
                }
                None => {
                    let _ = writeln!(out, "alpha: none");
                }
            }
            let _ = writeln!(out, "m_res: {}", result.m_res);
            let _ = writeln!(out, "cost: {}", result.cost);
            let _ = writeln!(out, "swapped: {}", result.swapped);
            let _ = writeln!(out, "success: {}", result.success);
            let _ = writeln!(out, "final_ci: {:.4}", result.final_ci);
            let w: Vec<String> = result.weights.weights.iter().map(|v| format!("{v:.4}")).collect();
            let _ = writeln!(out, "weights: [{}]", w.join(", "));
            for &(i, j) in &result.out_of_scale {
                let _ = writeln!(out, "warning: entry ({}, {}) left the [1/9, 9] scale", i + 1, j + 1);
            }
            for (k, s) in result.trace.iter().enumerate() {
                let w: Vec<String> = s.weights.weights.iter().map(|v| format!("{v:.4}")).collect();
                let _ = writeln!(
                    out,
                    "step {}: c[{},{}] = {:.4}, c[{},{}] = {:.4}; w = [{}]; CI = {:.4}; r(p) = {}, r(q) = {}",
                    k + 1,
                    s.pair.0 + 1,
                    s.pair.1 + 1,
                    s.values.0,
                    s.pair.1 + 1,
                    s.pair.0 + 1,
                    s.values.1,
                    w.join(", "),
                    s.ci,
                    s.ranks.0,
                    s.ranks.1
                );
                if let Some(m) = matrices.get(k) {
                    out.push_str(&matrix_to_text(m, 4));
                }
            }
            out
        }
    }
}

pub fn write_detection(report: &DetectionReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let suspects: Vec<serde_json::Value> = report
                .suspects
                .iter()
                .map(|s| {
                    json!({
                        "promoted": s.promoted + 1,
                        "reference": s.reference + 1,
                        "witnesses": s.witnesses.iter().map(|k| k + 1).collect::<Vec<_>>(),
                        "common_ratio": s.common_ratio,
                    })
                })
                .collect();
            let doc = json!({
                "tolerance": report.tolerance,
                "ci": report.ci,
                "gated": report.gated,
                "suspects": suspects,
            });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        OutputFormat::Text => {
            let mut out = format!("tolerance: {}\nci: {:.4}\n", report.tolerance, report.ci);
            if report.gated {
                out.push_str("gated: matrix is (nearly) consistent, scan skipped\n");
            }
            let _ = writeln!(out, "suspects: {}", report.suspects.len());
            for s in &report.suspects {
                let ks: Vec<String> = s.witnesses.iter().map(|k| (k + 1).to_string()).collect();
                let _ = writeln!(
                    out,
                    "row {} promoted over row {}: ratio {} at columns {}",
                    s.promoted + 1,
                    s.reference + 1,
                    format_sig(s.common_ratio),
                    ks.join(",")
                );
            }
            out
        }
    }
}

const EXPERIMENT_KEYS: &[&str] = &[
    "n",
    "algorithms",
    "methods",
    "bucket_width",
    "bucket_count",
    "trials_per_bucket",
    "delta_pq",
    "ci_threshold",
    "alpha_start",
    "alpha_step",
    "selection",
    "seed",
    "generation",
];
const REQUIRED_KEYS: &[&str] = &["n", "delta_pq"];
const GENERATION_KEYS: &[&str] = &["weight_range", "acceptance", "max_attempts"];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerationSection {
    weight_range: Option<(f64, f64)>,
    acceptance: Option<f64>,
    max_attempts: Option<u64>,
}

/// Parses a TOML experiment config. Keys are the [`ExperimentConfig`]
/// field names plus an optional `[generation]` table (`weight_range`,
/// `acceptance`, `max_attempts`). A missing `seed` falls back to
/// `default_seed`.
pub fn read_experiment_config(text: &str, default_seed: Option<u64>) -> Result<(ExperimentConfig, GenerationConfig)> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let (line, column) = e
            .span()
            .map(|s| line_col(text, s.start))
            .unwrap_or((0, 0));
        Error::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    for key in table.keys() {
        if !EXPERIMENT_KEYS.contains(&key.as_str()) {
            return Err(Error::UnknownKey(key.clone()));
        }
    }
    for key in REQUIRED_KEYS {
        if !table.contains_key(*key) {
            return Err(Error::MissingRequired(key.to_string()));
        }
    }
    let mut table = table;
    let generation = table.remove("generation");
    let has_seed = table.contains_key("seed");

    let mut cfg: ExperimentConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Range {
        name: "config".into(),
        message: e.message().to_string(),
    })?;
    if !has_seed {
        cfg.seed = default_seed.unwrap_or(0);
    }
    cfg.validate()?;
    if cfg.trials_per_bucket < 1 {
        return Err(Error::Range {
            name: "trials_per_bucket".into(),
            message: "must be >= 1".into(),
        });
    }

    let mut gen = GenerationConfig {
        n: cfg.n,
        seed: cfg.seed,
        acceptance: None,
        ..GenerationConfig::default()
    };
    if let Some(section) = generation {
        let toml::Value::Table(t) = &section else {
            return Err(Error::Range {
                name: "generation".into(),
                message: "must be a table".into(),
            });
        };
        for key in t.keys() {
            if !GENERATION_KEYS.contains(&key.as_str()) {
                return Err(Error::UnknownKey(format!("generation.{key}")));
            }
        }
        let s: GenerationSection = section.try_into().map_err(|e: toml::de::Error| Error::Range {
            name: "generation".into(),
            message: e.message().to_string(),
        })?;
        if let Some(r) = s.weight_range {
            gen.weight_range = r;
        }
        gen.acceptance = s.acceptance;
        if let Some(m) = s.max_attempts {
            gen.max_attempts = m;
        }
    }
    gen.validate()?;
    Ok((cfg, gen))
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, column)
}

pub const EXPERIMENT_CSV_HEADER: [&str; 10] = [
    "n",
    "algorithm",
    "method",
    "delta_pq",
    "ci_low",
    "ci_high",
    "trials",
    "successes",
    "sr",
    "mean_m_res",
];

/// Experiment results as CSV with a header row.
pub fn write_experiment_csv<W: Write>(stats: &[BucketStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(EXPERIMENT_CSV_HEADER).map_err(csv_err)?;
    for s in stats {
        w.write_record([
            s.n.to_string(),
            s.algorithm.to_string(),
            s.method.to_string(),
            s.delta_pq.to_string(),
            format!("{:.6}", s.ci_low),
            format!("{:.6}", s.ci_high),
            s.trials.to_string(),
            s.successes.to_string(),
            format!("{:.6}", s.sr),
            format!("{:.6}", s.mean_m_res),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn experiment_csv(stats: &[BucketStats]) -> String {
    let mut buf = Vec::new();
    write_experiment_csv(stats, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}
