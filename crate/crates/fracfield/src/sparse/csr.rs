//! Compressed sparse row storage for the symmetric FEM matrices.

use crate::error::{Error, Result};

/// Sparse matrix in CSR format with full (not triangular) storage.
///
/// Invariants enforced at construction: `row_offsets` has length
/// `nrows + 1` and is nondecreasing, column indices are strictly
/// increasing within each row, and the last offset equals the number
/// of stored entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
        symmetric: bool,
    ) -> Result<Self> {
        if row_offsets.len() != nrows + 1 {
            return Err(Error::DimensionMismatch(format!(
                "row_offsets length {} for {} rows",
                row_offsets.len(),
                nrows
            )));
        }
        if row_offsets[0] != 0 || *row_offsets.last().unwrap() != col_indices.len() {
            return Err(Error::DimensionMismatch(
                "row_offsets do not cover the entry arrays".into(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(Error::DimensionMismatch(
                "col_indices and values differ in length".into(),
            ));
        }
        for r in 0..nrows {
            if row_offsets[r] > row_offsets[r + 1] {
                return Err(Error::DimensionMismatch("row_offsets decrease".into()));
            }
            let cols = &col_indices[row_offsets[r]..row_offsets[r + 1]];
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::DimensionMismatch(format!(
                        "columns not strictly increasing in row {r}"
                    )));
                }
            }
            if let Some(&last) = cols.last() {
                if last >= ncols {
                    return Err(Error::DimensionMismatch(format!(
                        "column index {last} out of bounds in row {r}"
                    )));
                }
            }
        }
        let m = SparseMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
            symmetric,
        };
        if symmetric && !m.is_value_symmetric(0.0) {
            return Err(Error::DimensionMismatch(
                "matrix flagged symmetric but storage is not".into(),
            ));
        }
        Ok(m)
    }

    /// Clone of the pattern with fresh values; callers guarantee the
    /// length matches, so the constructor-time checks are skipped.
    pub(crate) fn with_same_pattern(&self, values: Vec<f64>, symmetric: bool) -> SparseMatrix {
        debug_assert_eq!(values.len(), self.values.len());
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
            values,
            symmetric,
        }
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn same_pattern_as(&self, other: &SparseMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_offsets == other.row_offsets
            && self.col_indices == other.col_indices
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    /// Symmetric tridiagonal matrix with constant diagonals.
    pub fn tridiagonal(n: usize, off: f64, diag: f64) -> Self {
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..n {
            if i > 0 {
                col_indices.push(i - 1);
                values.push(off);
            }
            col_indices.push(i);
            values.push(diag);
            if i + 1 < n {
                col_indices.push(i + 1);
                values.push(off);
            }
            row_offsets.push(col_indices.len());
        }
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_offsets,
            col_indices,
            values,
            symmetric: true,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric_flagged(&self) -> bool {
        self.symmetric
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// Entry (i,j) present iff (j,i) present with equal value up to `tol`.
    pub fn is_value_symmetric(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if (self.get(j, i) - v).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// y = A x. Sequential row loop; bit-identical for identical inputs.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch(format!(
                "spmv: vector length {} against {} columns",
                x.len(),
                self.ncols
            )));
        }
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        Ok(y)
    }

    pub(crate) fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    /// a*self + b*other, entrywise on the merged pattern.
    pub fn linear_combination(&self, a: f64, other: &SparseMatrix, b: f64) -> Result<SparseMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch(
                "linear_combination on different shapes".into(),
            ));
        }
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let ja = ca.get(p).copied().unwrap_or(usize::MAX);
                let jb = cb.get(q).copied().unwrap_or(usize::MAX);
                if ja == jb {
                    col_indices.push(ja);
                    values.push(a * va[p] + b * vb[q]);
                    p += 1;
                    q += 1;
                } else if ja < jb {
                    col_indices.push(ja);
                    values.push(a * va[p]);
                    p += 1;
                } else {
                    col_indices.push(jb);
                    values.push(b * vb[q]);
                    q += 1;
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_offsets,
            col_indices,
            values,
            symmetric: self.symmetric && other.symmetric,
        })
    }

    /// Kronecker product self ⊗ other. Rows of both factors must be sorted,
    /// which CSR guarantees, so the result rows come out sorted as well.
    pub fn kron(&self, other: &SparseMatrix) -> SparseMatrix {
        let nrows = self.nrows * other.nrows;
        let ncols = self.ncols * other.ncols;
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(self.nnz() * other.nnz());
        let mut values = Vec::with_capacity(self.nnz() * other.nnz());
        row_offsets.push(0);
        for ia in 0..self.nrows {
            let (ca, va) = self.row(ia);
            for ib in 0..other.nrows {
                let (cb, vb) = other.row(ib);
                for (&ja, &a) in ca.iter().zip(va) {
                    for (&jb, &b) in cb.iter().zip(vb) {
                        col_indices.push(ja * other.ncols + jb);
                        values.push(a * b);
                    }
                }
                row_offsets.push(col_indices.len());
            }
        }
        SparseMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
            symmetric: self.symmetric && other.symmetric,
        }
    }
}

/// Free-function form of the sparse matrix-vector product.
pub fn spmv(a: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    a.mul_vec(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spmv() {
        let a = SparseMatrix::identity(3);
        let y = spmv(&a, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn stiffness_spmv_hand_expanded() {
        // 1D P1 stiffness (1/h) tridiag(-1, 2, -1) with h = 1/4:
        // rows of A·(1,1,1) are 4·(2-1), 4·(-1+2-1), 4·(-1+2).
        let h = 0.25;
        let a = SparseMatrix::tridiagonal(3, -1.0 / h, 2.0 / h);
        let y = spmv(&a, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(y, vec![4.0, 0.0, 4.0]);
    }

    #[test]
    fn zero_matrix_spmv() {
        let a = SparseMatrix::from_parts(2, 2, vec![0, 0, 0], vec![], vec![], true).unwrap();
        let y = spmv(&a, &[3.0, -1.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let a = SparseMatrix::identity(3);
        assert!(spmv(&a, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rejects_unsorted_columns() {
        let r = SparseMatrix::from_parts(1, 3, vec![0, 2], vec![2, 0], vec![1.0, 1.0], false);
        assert!(r.is_err());
    }

    #[test]
    fn kron_against_dense_expansion() {
        let a = SparseMatrix::tridiagonal(2, 1.0, 4.0);
        let b = SparseMatrix::tridiagonal(3, -1.0, 2.0);
        let k = a.kron(&b);
        assert_eq!(k.nrows(), 6);
        for i in 0..6 {
            for j in 0..6 {
                let expect = a.get(i / 3, j / 3) * b.get(i % 3, j % 3);
                assert_eq!(k.get(i, j), expect, "entry ({i},{j})");
            }
        }
        assert!(k.is_value_symmetric(0.0));
    }

    #[test]
    fn linear_combination_merges_patterns() {
        let a = SparseMatrix::identity(3);
        let b = SparseMatrix::tridiagonal(3, -1.0, 2.0);
        let c = a.linear_combination(2.0, &b, 3.0).unwrap();
        assert_eq!(c.get(0, 0), 2.0 + 6.0);
        assert_eq!(c.get(0, 1), -3.0);
        assert_eq!(c.get(2, 1), -3.0);
    }
}
