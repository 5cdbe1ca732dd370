//! Compressed sparse row storage.

use rayon::prelude::*;

/// CSR matrix. Rows may be a subset of the column space (interior rows over
/// all mesh nodes), so each row records which column is its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
    /// Column holding the diagonal entry of each row.
    pub diag_cols: Vec<usize>,
}

// rows shorter than this are not worth a rayon split
const PAR_MIN_ROWS: usize = 4096;

impl SparseMatrix {
    /// Builds a matrix from (row, col, value) triplets, summing duplicates.
    /// Every row receives an explicit (possibly zero) diagonal slot.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        diag_cols: Vec<usize>,
        triplets: &[(usize, usize, f64)],
    ) -> Self {
        assert_eq!(diag_cols.len(), n_rows);
        let mut rows: Vec<Vec<(usize, f64)>> = (0..n_rows).map(|r| vec![(diag_cols[r], 0.0)]).collect();
        for &(r, c, v) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of range");
            rows[r].push((c, v));
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if col_indices.len() > *row_offsets.last().unwrap() && *col_indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
            diag_cols,
        }
    }

    /// Square matrix from a dense row-major array, keeping the diagonal and
    /// all non-zero entries.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut trip = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n);
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 || i == j {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, n, (0..n).collect(), &trip)
    }

    /// Same pattern with all values zero.
    pub fn zeros_like(&self) -> Self {
        Self {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn same_pattern(&self, other: &SparseMatrix) -> bool {
        self.n_rows == other.n_rows
            && self.n_cols == other.n_cols
            && self.row_offsets == other.row_offsets
            && self.col_indices == other.col_indices
            && self.diag_cols == other.diag_cols
    }

    pub fn row_range(&self, r: usize) -> std::ops::Range<usize> {
        self.row_offsets[r]..self.row_offsets[r + 1]
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let rg = self.row_range(r);
        (&self.col_indices[rg.clone()], &self.values[rg])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self, r: usize) -> f64 {
        self.get(r, self.diag_cols[r])
    }

    fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(r);
        cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
    }

    /// y = A x. Row sums are taken in column order, so the result does not
    /// depend on the thread count.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        if self.n_rows >= PAR_MIN_ROWS {
            (0..self.n_rows).into_par_iter().map(|r| self.row_dot(r, x)).collect()
        } else {
            (0..self.n_rows).map(|r| self.row_dot(r, x)).collect()
        }
    }

    /// Largest off-diagonal entry over all rows (−∞ if there is none).
    pub fn max_off_diagonal(&self) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for r in 0..self.n_rows {
            let d = self.diag_cols[r];
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if c != d {
                    m = m.max(v);
                }
            }
        }
        m
    }

    /// Checks the structural CSR invariants.
    pub fn check_structure(&self) -> bool {
        self.row_offsets.len() == self.n_rows + 1
            && self.row_offsets[0] == 0
            && self.row_offsets.windows(2).all(|w| w[0] <= w[1])
            && *self.row_offsets.last().unwrap() == self.col_indices.len()
            && self.col_indices.len() == self.values.len()
            && (0..self.n_rows).all(|r| {
                let (cols, _) = self.row(r);
                cols.windows(2).all(|w| w[0] < w[1]) && cols.iter().all(|&c| c < self.n_cols)
            })
    }
}
