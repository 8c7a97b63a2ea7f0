//! Compressed sparse column storage for the design matrix.
//!
//! Every solver kernel is a column operation (`a_jᵀ r` and `r += h·a_j`),
//! so the column layout is the only one kept. Row counts are derived once
//! at construction for the partial-separability degree.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Real matrix in compressed sparse column (CSC) form.
///
/// Immutable after construction, so any number of workers may read it.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    row_nnz: Vec<usize>,
}

/// Borrowed view of one stored column.
#[derive(Debug, Clone, Copy)]
pub struct Column<'a> {
    pub rows: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> Column<'a> {
    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.rows.iter().copied().zip(self.values.iter().copied())
    }

    /// `a_jᵀ y`, accumulated in storage order.
    #[inline]
    pub fn dot(&self, y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (&r, &v) in self.rows.iter().zip(self.values) {
            acc += v * y[r];
        }
        acc
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

impl SparseMatrix {
    /// Builds a matrix from raw CSC arrays, checking every structural invariant.
    pub fn from_csc(
        rows: usize,
        cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if col_ptr.len() != cols + 1 {
            return Err(Error::InvalidMatrix(format!(
                "col_ptr has length {} but cols + 1 = {}",
                col_ptr.len(),
                cols + 1
            )));
        }
        if col_ptr[0] != 0 {
            return Err(Error::InvalidMatrix("col_ptr[0] must be 0".into()));
        }
        if row_idx.len() != values.len() || col_ptr[cols] != values.len() {
            return Err(Error::InvalidMatrix(format!(
                "col_ptr[cols] = {}, row_idx has {}, values has {}",
                col_ptr[cols],
                row_idx.len(),
                values.len()
            )));
        }
        for j in 0..cols {
            let (lo, hi) = (col_ptr[j], col_ptr[j + 1]);
            if lo > hi {
                return Err(Error::InvalidMatrix(format!("col_ptr decreases at column {j}")));
            }
            let idx = &row_idx[lo..hi];
            if idx.iter().any(|&r| r >= rows) {
                return Err(Error::InvalidMatrix(format!(
                    "row index out of range in column {j}"
                )));
            }
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!(
                    "row indices not strictly increasing in column {j}"
                )));
            }
        }
        let mut row_nnz = vec![0usize; rows];
        for &r in &row_idx {
            row_nnz[r] += 1;
        }
        Ok(Self {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
            row_nnz,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    /// Repeated coordinates are summed; explicit zeros are kept.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        if let Some(&(r, c, _)) = entries.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::InvalidMatrix(format!(
                "entry ({r}, {c}) outside a {rows}x{cols} matrix"
            )));
        }
        entries.sort_by_key(|e| (e.1, e.0));

        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            row_idx.push(r);
            values.push(v);
            col_ptr[c + 1] += 1;
            last = Some((r, c));
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Self::from_csc(rows, cols, col_ptr, row_idx, values)
    }

    /// Row-major dense input; zeros are not stored.
    pub fn from_dense(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        let triplets = (0..rows).flat_map(|r| {
            (0..cols).filter_map(move |c| {
                let v = data[r * cols + c];
                (v != 0.0).then_some((r, c, v))
            })
        });
        Self::from_triplets(rows, cols, triplets)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_nnz(&self) -> &[usize] {
        &self.row_nnz
    }

    #[inline]
    pub fn column(&self, j: usize) -> Column<'_> {
        let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
        Column {
            rows: &self.row_idx[lo..hi],
            values: &self.values[lo..hi],
        }
    }

    /// Largest number of stored entries in any row; 0 for an all-zero matrix.
    pub fn max_row_nnz(&self) -> usize {
        self.row_nnz.iter().copied().max().unwrap_or(0)
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (r, v) in self.column(j).iter() {
                    y[r] += v * xj;
                }
            }
        }
        Ok(y)
    }

    /// `Aᵀ y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: y.len(),
            });
        }
        Ok((0..self.cols).map(|j| self.column(j).dot(y)).collect())
    }

    /// Iterates all stored entries as `(row, col, value)` in column order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.cols).flat_map(move |j| self.column(j).iter().map(move |(r, v)| (r, j, v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_layout() {
        let a = SparseMatrix::identity(2).unwrap();
        assert_eq!(a.col_ptr(), &[0, 1, 2]);
        assert_eq!(a.row_idx(), &[0, 1]);
        assert_eq!(a.max_row_nnz(), 1);
    }

    #[test]
    fn max_row_nnz_cases() {
        let dense = SparseMatrix::from_dense(3, 4, &[1.0; 12]).unwrap();
        assert_eq!(dense.max_row_nnz(), 4);

        // rows with nnz {2, 5, 3}
        let mut t = vec![];
        for c in 0..2 {
            t.push((0, c, 1.0));
        }
        for c in 0..5 {
            t.push((1, c, 1.0));
        }
        for c in 0..3 {
            t.push((2, c, 1.0));
        }
        let a = SparseMatrix::from_triplets(3, 5, t).unwrap();
        assert_eq!(a.row_nnz(), &[2, 5, 3]);
        assert_eq!(a.max_row_nnz(), 5);

        let zero = SparseMatrix::from_triplets(2, 2, []).unwrap();
        assert_eq!(zero.max_row_nnz(), 0);
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseMatrix::from_triplets(2, 2, [(0, 0, 2.0), (1, 1, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.values(), &[4.0, 1.0]);
    }

    #[test]
    fn rejects_broken_structure() {
        assert!(SparseMatrix::from_csc(2, 2, vec![0, 1], vec![0], vec![1.0]).is_err());
        assert!(SparseMatrix::from_csc(2, 1, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csc(2, 1, vec![0, 1], vec![2], vec![1.0]).is_err());
        assert!(SparseMatrix::from_csc(2, 2, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, [(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn products_match_dense() {
        let data = [1.0, 0.0, 2.0, 0.0, -3.0, 4.0];
        let a = SparseMatrix::from_dense(2, 3, &data).unwrap();
        let y = a.mul_vec(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y, vec![7.0, 6.0]);
        let z = a.tr_mul_vec(&[1.0, -1.0]).unwrap();
        assert_eq!(z, vec![1.0, 3.0, -2.0]);
    }

    #[test]
    fn column_lengths_follow_col_ptr() {
        let a = SparseMatrix::from_dense(3, 3, &[1.0, 0.0, 2.0, 0.0, 0.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        for j in 0..3 {
            assert_eq!(a.column(j).nnz(), a.col_ptr()[j + 1] - a.col_ptr()[j]);
            assert_eq!(a.column(j).iter().count(), a.column(j).nnz());
        }
    }
}
