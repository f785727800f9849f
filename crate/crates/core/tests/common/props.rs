// Strategies and invariant checks shared by the property suite and the
// acceptance target.

use pcman::io::{matrix_to_csv, matrix_to_json, parse_matrix, step_matrices, MatrixFormat};
use pcman::manip::compute_changes;
use pcman::matrix::RECIPROCITY_TOL;
use pcman::{consistency_index, derive, find_m, rank_of, Algorithm, ManipulationRequest, Method, PcMatrix, ScaleMode};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const CASES: u32 = 1000;

pub fn config() -> Config {
    Config {
        failure_persistence: None,
        ..Config::with_cases(CASES)
    }
}

pub fn runner() -> TestRunner {
    TestRunner::new(config())
}

pub fn weights(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    n.prop_flat_map(|n| prop::collection::vec(-2.7f64..2.7, n))
        .prop_map(|logs| logs.into_iter().map(f64::exp).collect())
}

/// Consistent matrix from random weights, then every upper entry scaled by
/// a factor in `[1/d, d]`.
pub fn matrices(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = PcMatrix> {
    (weights(n), 0.0f64..1.2).prop_flat_map(|(w, log_d)| {
        let n = w.len();
        prop::collection::vec(-1.0f64..1.0, n * (n - 1) / 2).prop_map(move |u| {
            let mut c = PcMatrix::consistent_from_weights(&w).unwrap();
            let mut k = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = c.get(i, j) * (u[k] * log_d).exp();
                    c.set_pair(i, j, v);
                    k += 1;
                }
            }
            c
        })
    })
}

/// Heuristic inputs: matrix, two selectors for `(p, q)`, alpha, algorithm
/// and method indices, clamp flag.
pub type Case = (PcMatrix, usize, usize, f64, usize, usize, bool);

pub fn cases(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Case> {
    (
        matrices(n),
        any::<usize>(),
        any::<usize>(),
        1.01f64..9.0,
        0usize..2,
        0usize..2,
        any::<bool>(),
    )
}

pub fn distinct_pair(n: usize, a: usize, b: usize) -> (usize, usize) {
    let p = a % n;
    let q = (p + 1 + b % (n - 1)) % n;
    (p, q)
}

pub fn check_reciprocal(c: &PcMatrix) -> Result<(), TestCaseError> {
    prop_assert!(c.reciprocity_error() <= RECIPROCITY_TOL, "error {}", c.reciprocity_error());
    for i in 0..c.n() {
        prop_assert_eq!(c.get(i, i), 1.0);
    }
    Ok(())
}

pub fn reciprocity_preserved(case: Case) -> Result<(), TestCaseError> {
    let (c, a, b, alpha, algo, method, clamp) = case;
    let (p, q) = distinct_pair(c.n(), a, b);
    let scale = if clamp { ScaleMode::Clamp } else { ScaleMode::Free };
    let ch = compute_changes(&c, alpha, p, q, Algorithm::ALL[algo], Method::ALL[method], scale).unwrap();
    check_reciprocal(&ch.matrix)?;
    for m in step_matrices(&c, &ch.trace) {
        check_reciprocal(&m)?;
    }
    let req = ManipulationRequest::new(p, q, Algorithm::ALL[algo], Method::ALL[method]).with_alpha(alpha, 1.0);
    check_reciprocal(&find_m(&c, &req).unwrap().matrix)?;
    check_reciprocal(&parse_matrix(&matrix_to_csv(&ch.matrix), MatrixFormat::Csv).unwrap())
}

pub fn normalized((c, method): (PcMatrix, usize)) -> Result<(), TestCaseError> {
    let pv = derive(&c, Method::ALL[method]).unwrap();
    let s: f64 = pv.weights.iter().sum();
    prop_assert!((s - 1.0).abs() < 1e-12, "sum {s}");
    prop_assert!(pv.weights.iter().all(|&w| w > 0.0));
    Ok(())
}

pub fn consistent_agree(w: Vec<f64>) -> Result<(), TestCaseError> {
    let c = PcMatrix::consistent_from_weights(&w).unwrap();
    check_reciprocal(&c)?;
    let ci = consistency_index(&c).unwrap();
    prop_assert!(ci.abs() <= 1e-10, "CI {ci}");
    let evm = derive(&c, Method::Evm).unwrap();
    let gmm = derive(&c, Method::Gmm).unwrap();
    for (a, b) in evm.weights.iter().zip(&gmm.weights) {
        prop_assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
    }
    Ok(())
}

pub fn scaling_invariant((w, log_k): (Vec<f64>, f64)) -> Result<(), TestCaseError> {
    let k = log_k.exp();
    let scaled: Vec<f64> = w.iter().map(|x| x * k).collect();
    let r = rank_of(&w);
    let rs = rank_of(&scaled);
    let n = w.len();
    prop_assert_eq!(r.at_position(n), rs.at_position(n));
    prop_assert_eq!(r.at_position(1), rs.at_position(1));
    prop_assert_eq!(r, rs);
    Ok(())
}

pub fn parity_and_bounds(case: Case) -> Result<(), TestCaseError> {
    let (c, a, b, alpha, algo, method, _) = case;
    let n = c.n();
    let (p, q) = distinct_pair(n, a, b);
    let algorithm = Algorithm::ALL[algo];
    let bound = match algorithm {
        Algorithm::Row => 2 * (n - 1),
        Algorithm::Matrix => n * (n - 1),
    };
    let ch = compute_changes(&c, alpha, p, q, algorithm, Method::ALL[method], ScaleMode::Free).unwrap();
    prop_assert_eq!(ch.m_res % 2, 0);
    prop_assert!(ch.m_res <= bound);
    prop_assert_eq!(ch.matrix.diff_positions(&c).len(), ch.m_res);

    let req = ManipulationRequest::new(p, q, algorithm, Method::ALL[method]).with_alpha(alpha.max(2.0), 0.5);
    let res = find_m(&c, &req).unwrap();
    prop_assert_eq!(res.m_res % 2, 0);
    prop_assert!(res.m_res <= bound);
    prop_assert_eq!(res.matrix.diff_positions(&c).len(), res.m_res);
    prop_assert_eq!(res.cost * 2, res.m_res);
    prop_assert_eq!(res.success, res.swapped && res.final_ci <= req.ci_threshold);
    // Among the runs that meet the goal, none touches fewer entries.
    if res.success {
        for s in res.sweep.iter().filter(|s| s.swapped && s.ci <= req.ci_threshold) {
            prop_assert!(res.m_res <= s.m_res);
        }
    }
    Ok(())
}

pub fn files_round_trip(c: PcMatrix) -> Result<(), TestCaseError> {
    let json = parse_matrix(&matrix_to_json(&c), MatrixFormat::Json).unwrap();
    prop_assert_eq!(&json, &c);
    let csv = parse_matrix(&matrix_to_csv(&c), MatrixFormat::Csv).unwrap();
    check_reciprocal(&csv)?;
    for (x, y) in csv.as_slice().iter().zip(c.as_slice()) {
        prop_assert!((x - y).abs() <= 1e-11 * y.abs());
    }
    Ok(())
}
