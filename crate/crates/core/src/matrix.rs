//! Reciprocal pairwise-comparison matrices.
//!
//! A [`PcMatrix`] holds `n × n` positive comparison values `c_ij` with a unit
//! diagonal and `c_ij · c_ji = 1`. Every constructor checks those invariants;
//! mutation goes through [`PcMatrix::set_pair`], which writes both members of
//! a reciprocal pair at once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the reciprocity check `|c_ij · c_ji − 1|`.
pub const RECIPROCITY_TOL: f64 = 1e-9;

/// Lower end of the comparison scale.
pub const SCALE_MIN: f64 = 1.0 / 9.0;
/// Upper end of the comparison scale.
pub const SCALE_MAX: f64 = 9.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct PcMatrix {
    n: usize,
    data: Vec<f64>,
}

impl PcMatrix {
    /// Validates a row-major grid and builds a matrix from it.
    ///
    /// Diagonal entries within `1e-9` of one are snapped to exactly one.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        for (row, r) in rows.iter().enumerate() {
            let len = r.as_ref().len();
            if len != n {
                return Err(Error::NotSquare { row, len, expected: n });
            }
        }
        let data: Vec<f64> = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::from_row_major(n, data)
    }

    /// Same as [`PcMatrix::from_rows`] for a flat row-major buffer.
    pub fn from_row_major(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::NotSquare {
                row: 0,
                len: data.len(),
                expected: n * n,
            });
        }
        if n < 2 {
            return Err(Error::TooSmall(n));
        }
        for i in 0..n {
            for j in 0..n {
                let v = data[i * n + j];
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::NonPositiveEntry { i, j, value: v });
                }
            }
        }
        for i in 0..n {
            let d = data[i * n + i];
            if (d - 1.0).abs() > RECIPROCITY_TOL {
                return Err(Error::NotReciprocal { i, j: i, product: d * d });
            }
            data[i * n + i] = 1.0;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let product = data[i * n + j] * data[j * n + i];
                if (product - 1.0).abs() > RECIPROCITY_TOL {
                    return Err(Error::NotReciprocal { i, j, product });
                }
            }
        }
        Ok(Self { n, data })
    }

    /// The fully indifferent matrix, all entries one.
    pub fn ones(n: usize) -> Result<Self> {
        Self::from_row_major(n, vec![1.0; n * n])
    }

    /// Builds the consistent matrix `c_ij = w_i / w_j`.
    pub fn consistent_from_weights(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        if n < 2 {
            return Err(Error::TooSmall(n));
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::NonPositiveWeight { index, value });
        }
        let mut data = vec![1.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = weights[i] / weights[j];
                data[i * n + j] = v;
                data[j * n + i] = 1.0 / v;
            }
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    /// Flat row-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Sets `c_ij = value` and `c_ji = 1 / value`.
    ///
    /// Panics if `i == j` or `value` is not a positive finite number.
    pub fn set_pair(&mut self, i: usize, j: usize, value: f64) {
        assert!(i != j, "cannot overwrite a diagonal entry");
        assert!(value.is_finite() && value > 0.0, "entry must be positive, got {value}");
        let n = self.n;
        self.data[i * n + j] = value;
        self.data[j * n + i] = 1.0 / value;
    }

    /// Largest `|c_ij · c_ji − 1|` over all pairs.
    pub fn reciprocity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self.get(i, j) * self.get(j, i) - 1.0).abs());
            }
        }
        worst
    }

    /// Positions `(i, j)` where the two matrices differ.
    pub fn diff_positions(&self, other: &PcMatrix) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n * n)
            .filter(|&k| self.data[k] != other.data[k])
            .map(|k| (k / n, k % n))
            .collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for PcMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<PcMatrix> for Vec<Vec<f64>> {
    fn from(m: PcMatrix) -> Self {
        m.to_rows()
    }
}

/// Elementwise distance `h_ij = a_ij · b_ji` between two matrices of the
/// same size. Entries above one mark where `a` exceeds `b`.
pub fn hadamard_distance(a: &PcMatrix, b: &PcMatrix) -> Result<Vec<Vec<f64>>> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            left: a.n(),
            right: b.n(),
        });
    }
    let n = a.n();
    Ok((0..n)
        .map(|i| (0..n).map(|j| a.get(i, j) * b.get(j, i)).collect())
        .collect())
}


#[cfg(test)]
mod tests {
    use super::fixtures::c0;
    use super::*;

    #[test]
    fn ones_is_valid() {
        let m = PcMatrix::from_rows(&[[1.0; 3]; 3]).unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.reciprocity_error(), 0.0);
    }

    #[test]
    fn example_matrix_is_valid() {
        assert_eq!(c0().n(), 4);
    }

    #[test]
    fn rejects_non_reciprocal_pair() {
        let err = PcMatrix::from_rows(&[[1.0, 2.0], [0.4, 1.0]]).unwrap_err();
        match err {
            Error::NotReciprocal { i, j, product } => {
                assert_eq!((i, j), (0, 1));
                assert!((product - 0.8).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_positive_and_non_square() {
        assert!(matches!(
            PcMatrix::from_rows(&[[1.0, -2.0], [-0.5, 1.0]]),
            Err(Error::NonPositiveEntry { i: 0, j: 1, .. })
        ));
        assert!(matches!(
            PcMatrix::from_rows(&[vec![1.0, 2.0], vec![0.5]]),
            Err(Error::NotSquare { row: 1, .. })
        ));
        assert!(matches!(PcMatrix::from_rows(&[[1.0]]), Err(Error::TooSmall(1))));
    }

    #[test]
    fn diagonal_is_snapped() {
        let m = PcMatrix::from_rows(&[[1.0 + 1e-11, 2.0], [0.5, 1.0 - 1e-11]]).unwrap();
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(1, 1), 1.0);
    }

    #[test]
    fn consistent_from_weights_ratios() {
        let m = PcMatrix::consistent_from_weights(&[1.0, 1.0, 1.0]).unwrap();
        assert!(m.as_slice().iter().all(|&v| v == 1.0));

        // w with the third weight promoted to 1.2 × the second.
        let w = [0.2657, 0.4242, 1.2 * 0.4242, 0.2495];
        let m = PcMatrix::consistent_from_weights(&w).unwrap();
        assert!((m.get(2, 3) - 2.0401).abs() < 5e-4);

        assert!(matches!(
            PcMatrix::consistent_from_weights(&[1.0, 0.0]),
            Err(Error::NonPositiveWeight { index: 1, .. })
        ));
    }

    #[test]
    fn hadamard_of_self_is_ones() {
        let a = c0();
        let h = hadamard_distance(&a, &a).unwrap();
        for row in &h {
            for &v in row {
                assert!((v - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn hadamard_matches_direct_loop() {
        let a = PcMatrix::from_rows(&[[1.0, 2.0, 0.25], [0.5, 1.0, 3.0], [4.0, 1.0 / 3.0, 1.0]])
            .unwrap();
        let b = PcMatrix::consistent_from_weights(&[0.5, 0.3, 0.2]).unwrap();
        let h = hadamard_distance(&a, &b).unwrap();
        let rows_a = a.to_rows();
        let rows_b = b.to_rows();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h[i][j], rows_a[i][j] * rows_b[j][i]);
                assert!((h[i][j] * h[j][i] - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn hadamard_dimension_mismatch() {
        let a = PcMatrix::ones(3).unwrap();
        let b = PcMatrix::ones(4).unwrap();
        assert_eq!(
            hadamard_distance(&a, &b).unwrap_err(),
            Error::DimensionMismatch { left: 3, right: 4 }
        );
    }
}
