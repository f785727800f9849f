// Independent reference implementations shared by the integration tests.
// The oracles below never call into the priority or manipulation code of
// the crate; `props` holds the property checks that do.

#![allow(dead_code, clippy::needless_range_loop)]

pub mod props;

use nalgebra::DMatrix;
use pcman::montecarlo::{draw_disturbed, stream};
use pcman::{Method, PcMatrix};
use rand::Rng;

pub const WEIGHT_RANGE: (f64, f64) = (1.0 / 15.0, 15.0);

pub fn rng(seed: u64, k: u64) -> rand_chacha::ChaCha8Rng {
    stream(seed, 7, k)
}

pub fn disturbed<R: Rng>(rng: &mut R, n: usize, d: f64) -> PcMatrix {
    draw_disturbed(n, d, WEIGHT_RANGE, rng).unwrap()
}

pub fn rows(c: &PcMatrix) -> Vec<Vec<f64>> {
    c.to_rows()
}

/// Largest real eigenvalue from a dense Schur decomposition.
pub fn dense_lambda_max(c: &[Vec<f64>]) -> f64 {
    let n = c.len();
    let m = DMatrix::from_fn(n, n, |i, j| c[i][j]);
    m.complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() < 1e-9)
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn dense_ci(c: &[Vec<f64>]) -> f64 {
    let n = c.len() as f64;
    (dense_lambda_max(c) - n) / (n - 1.0)
}

/// Principal eigenvector by max-normalized power iteration, rescaled to
/// sum one at the end.
pub fn oracle_evm(c: &[Vec<f64>]) -> Vec<f64> {
    let n = c.len();
    let mut v = vec![1.0; n];
    for _ in 0..200_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[i] += c[i][j] * v[j];
            }
        }
        let top = next.iter().cloned().fold(0.0, f64::max);
        for x in next.iter_mut() {
            *x /= top;
        }
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if delta < 1e-15 {
            break;
        }
    }
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

pub fn oracle_gmm(c: &[Vec<f64>]) -> Vec<f64> {
    let n = c.len() as f64;
    let g: Vec<f64> = c.iter().map(|r| r.iter().product::<f64>().powf(1.0 / n)).collect();
    let s: f64 = g.iter().sum();
    g.iter().map(|x| x / s).collect()
}

pub fn oracle_weights(c: &[Vec<f64>], method: Method) -> Vec<f64> {
    match method {
        Method::Evm => oracle_evm(c),
        Method::Gmm => oracle_gmm(c),
    }
}

/// Position 1 is the smallest weight; equal weights go to the lower index.
pub fn oracle_positions(w: &[f64]) -> Vec<usize> {
    (0..w.len())
        .map(|i| 1 + (0..w.len()).filter(|&j| w[j] < w[i] || (w[j] == w[i] && j < i)).count())
        .collect()
}

#[derive(Debug, Clone)]
pub struct OracleStep {
    pub pair: (usize, usize),
    pub value: f64,
    pub weights: Vec<f64>,
    pub ci: f64,
}

fn put(c: &mut [Vec<f64>], i: usize, j: usize, v: f64, method: Method, out: &mut Vec<OracleStep>) -> Vec<f64> {
    c[i][j] = v;
    c[j][i] = 1.0 / v;
    let w = oracle_weights(c, method);
    out.push(OracleStep {
        pair: (i, j),
        value: v,
        weights: w.clone(),
        ci: dense_ci(c),
    });
    w
}

fn promoted(w: &[f64], p: usize, q: usize) -> bool {
    let r = oracle_positions(w);
    r[p] > r[q]
}

/// Row heuristic written straight from its pseudo-code.
pub fn listing_row(c: &[Vec<f64>], alpha: f64, p: usize, q: usize, method: Method) -> (Vec<Vec<f64>>, Vec<OracleStep>) {
    let n = c.len();
    let mut res = c.to_vec();
    let mut steps = Vec::new();
    let mut w = put(&mut res, p, q, alpha, method, &mut steps);
    let mut row: Vec<(f64, usize)> = (0..n).filter(|&j| j != p && j != q).map(|j| (res[p][j], j)).collect();
    row.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    for (_, j) in row {
        if promoted(&w, p, q) {
            break;
        }
        let v = alpha * res[q][j];
        w = put(&mut res, p, j, v, method, &mut steps);
    }
    (res, steps)
}

/// Entries `(i, j, h)` the matrix heuristic may overwrite, in order.
pub type Respos = Vec<(usize, usize, f64)>;

/// Matrix heuristic written straight from its pseudo-code.
pub fn listing_matrix(
    c: &[Vec<f64>],
    alpha: f64,
    p: usize,
    q: usize,
    method: Method,
) -> (Vec<Vec<f64>>, Respos, Vec<OracleStep>) {
    let n = c.len();
    let mut res = c.to_vec();
    let mut w = oracle_weights(c, method);
    let mut target = w.clone();
    target[p] = alpha * w[q];
    let con = |i: usize, j: usize| target[i] / target[j];
    let mut respos = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let h = c[i][j] * con(j, i);
            if h > 1.0 + 1e-9 {
                respos.push((i, j, h));
            }
        }
    }
    respos.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut steps = Vec::new();
    for &(i, j, _) in &respos {
        if promoted(&w, p, q) {
            break;
        }
        w = put(&mut res, i, j, con(i, j), method, &mut steps);
    }
    (res, respos, steps)
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
}
