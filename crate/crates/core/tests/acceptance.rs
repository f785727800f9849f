//! Acceptance criteria. Each test prints one `ACCEPTANCE <id> PASS|FAIL`
//! line straight to stdout, so the lines show up even when libtest
//! captures output, then asserts the verdict.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use common::props;
use common::*;
use pcman::detect::{detect_row_manipulation, DEFAULT_TOL};
use pcman::io::{experiment_csv, parse_matrix, MatrixFormat};
use pcman::manip::matrix_plan;
use pcman::montecarlo::{run_experiment, select_pq};
use pcman::{
    consistency_index, derive, find_m, matrix_compute_changes, rank_of, row_compute_changes, Algorithm, BucketStats,
    ExperimentConfig, GenerationConfig, ManipulationRequest, Method, PcMatrix, ScaleMode,
};
use rand::Rng;

fn report(id: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    // libtest has already printed `test name ... ` without a newline.
    let _ = writeln!(out, "\nACCEPTANCE {id:<5} {verdict} {detail}");
}

fn c0() -> PcMatrix {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/c0.csv");
    parse_matrix(&std::fs::read_to_string(path).unwrap(), MatrixFormat::Csv).unwrap()
}

/// Records failed checks for one criterion.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn close(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.check((got - want).abs() <= tol, || format!("{what} = {got:.6}, expected {want} ± {tol}"));
    }

    fn finish(self, id: &str, summary: &str) {
        let pass = self.failures.is_empty();
        let detail = if pass {
            summary.to_string()
        } else {
            format!("{summary}; {}", self.failures.join("; "))
        };
        report(id, pass, &detail);
        assert!(pass, "criterion {id}: {}", self.failures.join("; "));
    }
}

#[test]
fn criterion_1_row_golden() {
    let mut ch = Checks::default();
    let start = Instant::now();
    let req = ManipulationRequest::new(2, 1, Algorithm::Row, Method::Evm).with_alpha(1.2, 1.0);
    let res = find_m(&c0(), &req).unwrap();
    let elapsed = start.elapsed();

    let pairs: Vec<_> = res.trace.iter().map(|s| (s.pair.0 + 1, s.pair.1 + 1)).collect();
    ch.check(pairs == [(3, 2), (3, 4), (3, 1)], || format!("pairs {pairs:?}"));
    let weights = [
        [0.2849, 0.3332, 0.1110, 0.2709],
        [0.3482, 0.3503, 0.1769, 0.1246],
        [0.1394, 0.3235, 0.3882, 0.1489],
    ];
    let cis = [0.4477, 0.3783, 0.0454];
    for (k, s) in res.trace.iter().enumerate().take(3) {
        for (i, w) in weights[k].iter().enumerate() {
            ch.close(&format!("w^({})_{}", k + 1, i + 1), s.weights.weights[i], *w, 1e-3);
        }
        ch.close(&format!("CI(C^({}))", k + 1), s.ci, cis[k], 2e-3);
    }
    ch.check(res.m_res == 6, || format!("m_res = {}", res.m_res));
    ch.check(res.success, || "not successful".into());
    ch.check(elapsed < Duration::from_secs(1), || format!("runtime {elapsed:?}"));
    ch.finish(
        "1",
        &format!(
            "row golden: pairs {pairs:?}, CI trajectory {:?}, m_res {}, {elapsed:.2?}",
            res.trace.iter().map(|s| format!("{:.4}", s.ci)).collect::<Vec<_>>(),
            res.m_res
        ),
    );
}

#[test]
fn criterion_2_matrix_golden() {
    let mut ch = Checks::default();
    let start = Instant::now();
    let plan = matrix_plan(&c0(), 1.2, 2, 1, Method::Evm).unwrap();
    let req = ManipulationRequest::new(2, 1, Algorithm::Matrix, Method::Evm).with_alpha(1.2, 1.0);
    let res = find_m(&c0(), &req).unwrap();
    let elapsed = start.elapsed();

    let had = [
        [1.0, 0.51148, 12.2943, 1.45109],
        [1.95532, 1.0, 3.87048, 1.00999],
        [0.0813567, 0.258333, 1.0, 0.0681328],
        [0.689146, 0.990145, 14.6741, 1.0],
    ];
    for (i, row) in had.iter().enumerate() {
        for (j, h) in row.iter().enumerate() {
            ch.close(&format!("h_{}{}", i + 1, j + 1), plan.hadamard[i][j], *h, 1e-3);
        }
    }
    let respos = [14.6741, 12.2943, 3.87048, 1.95532, 1.45109, 1.00999];
    let got: Vec<f64> = plan.respos.iter().map(|d| d.h).collect();
    ch.check(got.len() == respos.len(), || format!("respos {got:?}"));
    for (k, (g, w)) in got.iter().zip(respos).enumerate() {
        ch.close(&format!("respos[{k}]"), *g, w, 1e-3);
    }
    ch.check(res.trace.len() == 4, || format!("{} pairs modified", res.trace.len()));
    for (i, w) in [0.2013, 0.2923, 0.3499, 0.1565].iter().enumerate() {
        ch.close(&format!("w_{}", i + 1), res.weights.weights[i], *w, 1e-3);
    }
    ch.close("CI(C^(4))", res.final_ci, 0.0056, 1e-3);
    ch.check(res.m_res == 8, || format!("m_res = {}", res.m_res));
    ch.check(elapsed < Duration::from_secs(1), || format!("runtime {elapsed:?}"));
    ch.finish(
        "2",
        &format!(
            "matrix golden: respos {:?}, {} pairs, final CI {:.4}, m_res {}, {elapsed:.2?}",
            got.iter().map(|h| format!("{h:.4}")).collect::<Vec<_>>(),
            res.trace.len(),
            res.final_ci,
            res.m_res
        ),
    );
}

#[test]
fn criterion_3_consistency_golden() {
    let mut ch = Checks::default();
    let ci = consistency_index(&c0()).unwrap();
    ch.close("CI(C^(0))", ci, 0.1420, 5e-4);
    ch.finish("3", &format!("CI(C^(0)) = {ci:.5}"));
}

#[test]
fn criterion_4_invariants() {
    let mut ch = Checks::default();
    let mut run = |name: &str, outcome: Result<(), String>| {
        ch.check(outcome.is_ok(), || format!("{name}: {outcome:?}"));
    };
    let mut r = props::runner();
    run(
        "reciprocity",
        r.run(&props::cases(3..=7), props::reciprocity_preserved).map_err(|e| e.to_string()),
    );
    let mut r = props::runner();
    run(
        "normalization",
        r.run(&(props::matrices(2..=9), 0usize..2), props::normalized).map_err(|e| e.to_string()),
    );
    let mut r = props::runner();
    run(
        "consistent CI and EVM = GMM",
        r.run(&props::weights(2..=9), props::consistent_agree).map_err(|e| e.to_string()),
    );
    let mut r = props::runner();
    run(
        "rank scaling",
        r.run(&(props::weights(2..=9), -5.0f64..5.0), props::scaling_invariant).map_err(|e| e.to_string()),
    );
    let mut r = props::runner();
    run(
        "m_res parity and bounds",
        r.run(&props::cases(3..=7), props::parity_and_bounds).map_err(|e| e.to_string()),
    );
    ch.finish(
        "4",
        &format!(
            "5 invariants x {} cases: reciprocity, normalization, consistent CI/EVM=GMM, rank scaling, m_res parity/bounds",
            props::CASES
        ),
    );
}

fn random_pq<R: Rng>(rng: &mut R, c: &PcMatrix, method: Method) -> (usize, usize) {
    let ranking = rank_of(&derive(c, method).unwrap().weights);
    select_pq(&ranking, rng.random_range(1..c.n())).unwrap()
}

#[test]
fn criterion_5_oracle_equivalence() {
    let mut ch = Checks::default();
    let mut worst_lambda: f64 = 0.0;
    for k in 0..200u64 {
        let mut r = rng(50, k);
        let n = 3 + (k % 3) as usize;
        let d = r.random_range(1.0..3.5);
        let c = disturbed(&mut r, n, d);
        let got = derive(&c, Method::Evm).unwrap().lambda_max.unwrap();
        let want = dense_lambda_max(&rows(&c));
        worst_lambda = worst_lambda.max((got - want).abs());
    }
    ch.check(worst_lambda <= 1e-8, || format!("lambda_max error {worst_lambda:e}"));

    let mut steps = [0usize; 2];
    for k in 0..400u64 {
        let mut r = rng(51, k);
        let n = r.random_range(3..=7);
        let d = r.random_range(1.2..3.0);
        let c = disturbed(&mut r, n, d);
        let method = Method::ALL[(k % 2) as usize];
        let (p, q) = random_pq(&mut r, &c, method);
        let alpha = r.random_range(1.05..9.0);
        let algo = (k / 2 % 2) as usize;
        let (trace, oracle) = if algo == 0 {
            let got = row_compute_changes(&c, alpha, p, q, method, ScaleMode::Free).unwrap();
            (got.trace, listing_row(&rows(&c), alpha, p, q, method).1)
        } else {
            let got = matrix_compute_changes(&c, alpha, p, q, method, ScaleMode::Free).unwrap();
            (got.trace, listing_matrix(&rows(&c), alpha, p, q, method).2)
        };
        let same = trace.len() == oracle.len()
            && trace.iter().zip(&oracle).all(|(s, o)| {
                s.pair == o.pair
                    && (s.values.0 - o.value).abs() <= 1e-9 * o.value
                    && s.weights.weights.iter().zip(&o.weights).all(|(a, b)| (a - b).abs() <= 1e-9)
                    && (s.ci - o.ci).abs() <= 1e-8
            });
        ch.check(same, || format!("{} heuristic differs on case {k}", Algorithm::ALL[algo]));
        steps[algo] += oracle.len();
    }
    ch.finish(
        "5",
        &format!(
            "200 matrices n in 3..=5, max |lambda_max - dense| = {worst_lambda:.1e}; listings matched on 400 cases ({} row steps, {} matrix steps)",
            steps[0], steps[1]
        ),
    );
}

#[test]
fn criterion_6_detection() {
    let mut ch = Checks::default();
    let mut flagged = 0;
    let mut corpus = 0;
    let mut k = 0u64;
    while corpus < 500 {
        let mut r = rng(60, k);
        k += 1;
        let n = r.random_range(4..=8);
        let d = r.random_range(1.2..2.5);
        let c = disturbed(&mut r, n, d);
        let (p, q) = random_pq(&mut r, &c, Method::Evm);
        let alpha = r.random_range(1.1..3.0);
        let out = row_compute_changes(&c, alpha, p, q, Method::Evm, ScaleMode::Free).unwrap();
        if out.trace.len() < 3 || !out.out_of_scale.is_empty() {
            continue;
        }
        corpus += 1;
        if detect_row_manipulation(&out.matrix, DEFAULT_TOL).unwrap().flags(p, q) {
            flagged += 1;
        }
    }
    ch.check(flagged == 500, || format!("{flagged}/500 flagged"));

    let mut false_pos = 0;
    for k in 0..500u64 {
        let mut r = rng(61, k);
        let n = r.random_range(4..=8);
        let d = r.random_range(1.5..3.0);
        let c = disturbed(&mut r, n, d);
        if !detect_row_manipulation(&c, DEFAULT_TOL).unwrap().suspects.is_empty() {
            false_pos += 1;
        }
    }
    let rate = false_pos as f64 / 500.0;
    ch.check(rate < 0.10, || format!("false-positive rate {rate}"));
    ch.finish(
        "6",
        &format!("{flagged}/500 manipulated matrices flagged with the right (p, q); false-positive rate {rate:.3} on 500 untouched (d >= 1.5)"),
    );
}

fn stats_by_bucket(stats: &[BucketStats]) -> BTreeMap<(Method, Algorithm, usize), &BucketStats> {
    stats
        .iter()
        .map(|s| ((s.method, s.algorithm, (s.ci_low / 0.005).round() as usize), s))
        .collect()
}

fn archive_dir() -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Paired EVM and GMM mean m_res per bucket and algorithm.
fn mres_comparison_csv(stats: &[BucketStats]) -> String {
    let by = stats_by_bucket(stats);
    let mut out = String::from("algorithm,ci_low,ci_high,mean_m_res_evm,mean_m_res_gmm\n");
    for algorithm in Algorithm::ALL {
        for b in 0..20 {
            if let (Some(e), Some(g)) = (by.get(&(Method::Evm, algorithm, b)), by.get(&(Method::Gmm, algorithm, b))) {
                out.push_str(&format!(
                    "{algorithm},{:.3},{:.3},{:.6},{:.6}\n",
                    e.ci_low, e.ci_high, e.mean_m_res, g.mean_m_res
                ));
            }
        }
    }
    out
}

#[test]
fn criterion_7_monte_carlo_trends() {
    let start = Instant::now();
    let configs = [(5, 1), (5, 4), (7, 1), (7, 6)];
    let mut runs = Vec::new();
    for &(n, delta) in &configs {
        let cfg = ExperimentConfig {
            n,
            delta_pq: delta,
            methods: Method::ALL.to_vec(),
            algorithms: Algorithm::ALL.to_vec(),
            bucket_width: 0.005,
            bucket_count: 20,
            trials_per_bucket: 200,
            seed: 2024,
            ..ExperimentConfig::default()
        };
        let gen = GenerationConfig {
            acceptance: None,
            ..GenerationConfig::default()
        };
        let report = run_experiment(&cfg, &gen).unwrap();
        runs.push(((n, delta), report));
    }
    let elapsed = start.elapsed();

    let mut a = Checks::default();
    let mut b = Checks::default();
    let mut c = Checks::default();
    let mut d = Checks::default();
    let mut a_min = f64::INFINITY;
    let mut b_gap = f64::NEG_INFINITY;
    let mut c_detail = Vec::new();
    let mut d_detail = Vec::new();
    let dir = archive_dir();
    for ((n, delta), report) in &runs {
        for (k, e) in &report.bucket_errors {
            let msg = format!("n={n} dpq={delta} bucket {k}: {e}");
            a.check(false, || msg.clone());
        }
        let by = stats_by_bucket(&report.stats);
        for method in Method::ALL {
            let mut mean = BTreeMap::new();
            for algorithm in Algorithm::ALL {
                let ms: Vec<f64> = (0..20)
                    .filter_map(|k| by.get(&(method, algorithm, k)).map(|s| s.mean_m_res))
                    .collect();
                mean.insert(algorithm, ms.iter().sum::<f64>() / ms.len() as f64);
            }
            for k in 0..20 {
                let (Some(row), Some(mat)) = (by.get(&(method, Algorithm::Row, k)), by.get(&(method, Algorithm::Matrix, k)))
                else {
                    b.check(false, || format!("n={n} dpq={delta} {method} bucket {k} missing"));
                    continue;
                };
                if mat.ci_high <= 0.05 + 1e-12 {
                    a_min = a_min.min(mat.sr);
                    a.check(mat.sr >= 0.95, || {
                        format!("n={n} dpq={delta} {method} CI [{:.3},{:.3}) matrix SR {:.3}", mat.ci_low, mat.ci_high, mat.sr)
                    });
                }
                b_gap = b_gap.max(row.sr - mat.sr);
                b.check(mat.sr >= row.sr - 0.05, || {
                    format!(
                        "n={n} dpq={delta} {method} CI [{:.3},{:.3}) matrix SR {:.3} < row SR {:.3} - 0.05",
                        mat.ci_low, mat.ci_high, mat.sr, row.sr
                    )
                });
            }
            let (mr, mm) = (mean[&Algorithm::Row], mean[&Algorithm::Matrix]);
            let op = if mm <= mr { "<=" } else { ">" };
            c_detail.push(format!("n={n} dpq={delta} {method}: matrix {mm:.3} {op} row {mr:.3}"));
            c.check(mm <= mr, || format!("n={n} dpq={delta} {method}"));
        }

        let full = dir.join(format!("experiment_n{n}_dpq{delta}.csv"));
        let cmp = dir.join(format!("mres_evm_vs_gmm_n{n}_dpq{delta}.csv"));
        let written = std::fs::write(&full, experiment_csv(&report.stats)).is_ok()
            && std::fs::write(&cmp, mres_comparison_csv(&report.stats)).is_ok();
        d.check(written, || format!("could not write {}", cmp.display()));
        let mut diffs = Vec::new();
        for algorithm in Algorithm::ALL {
            let gaps: Vec<f64> = (0..20)
                .filter_map(|k| {
                    let e = by.get(&(Method::Evm, algorithm, k))?;
                    let g = by.get(&(Method::Gmm, algorithm, k))?;
                    Some((e.mean_m_res - g.mean_m_res).abs())
                })
                .collect();
            diffs.push(format!("{algorithm} {:.3}", gaps.iter().sum::<f64>() / gaps.len() as f64));
        }
        d_detail.push(format!("n={n} dpq={delta}: {}", diffs.join(", ")));
    }

    let verdicts = [
        (a.failures.is_empty(), "7(a)"),
        (b.failures.is_empty(), "7(b)"),
        (c.failures.is_empty(), "7(c)"),
        (d.failures.is_empty(), "7(d)"),
    ];
    let mut failed: Vec<&str> = verdicts.iter().filter(|v| !v.0).map(|v| v.1).collect();
    let all = |ch: Checks, id: &str, summary: String| {
        let pass = ch.failures.is_empty();
        let detail = if pass { summary } else { format!("{summary}; failing: {}", ch.failures.join(", ")) };
        report(id, pass, &detail);
    };
    all(a, "7(a)", format!("matrix SR >= 0.95 for CI <= 0.05 across n in {{5,7}}, dpq in {{1,n-1}}, EVM and GMM; min {a_min:.3}"));
    all(b, "7(b)", format!("matrix SR >= row SR - 0.05 in every bucket; largest row-matrix gap {b_gap:.3}"));
    all(c, "7(c)", format!("mean m_res over CI <= 0.10: {}", c_detail.join("; ")));
    all(
        d,
        "7(d)",
        format!(
            "EVM vs GMM m_res curves archived in {}; mean |EVM-GMM| per bucket: {}",
            dir.display(),
            d_detail.join("; ")
        ),
    );
    let fast = elapsed < Duration::from_secs(600);
    report("7-rt", fast, &format!("Monte Carlo runtime {elapsed:.1?} (target < 10 min)"));
    if !fast {
        failed.push("7 runtime");
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}

#[test]
fn criterion_8_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "n = 5\ndelta_pq = 1\nbucket_count = 8\ntrials_per_bucket = 40\nmethods = [\"evm\", \"gmm\"]\nseed = 77\n",
    )
    .unwrap();
    let run = |name: &str, threads: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_pcman"));
        cmd.args(["experiment", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        if let Some(t) = threads {
            cmd.env("RAYON_NUM_THREADS", t);
        }
        let status = cmd.status().unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let first = run("a.csv", None);
    let second = run("b.csv", None);
    let single = run("c.csv", Some("1"));
    let mut ch = Checks::default();
    ch.check(first == second, || "two runs differ".into());
    ch.check(first == single, || "single-threaded run differs".into());
    ch.check(first.len() > 100, || "empty output".into());
    ch.finish(
        "8",
        &format!("two `experiment` runs byte-identical ({} bytes), also with RAYON_NUM_THREADS=1", first.len()),
    );
}
