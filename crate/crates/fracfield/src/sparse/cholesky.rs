//! Sparse Cholesky factorization in natural ordering.
//!
//! The tensor-product meshes produce banded matrices in lexicographic
//! node order, so the factor fills at most the band. The factorization
//! runs on a dense band workspace of width `bandwidth + 1` and emits the
//! lower factor back in CSR form.

use super::csr::SparseMatrix;
use crate::error::{Error, Result};

/// Computes lower-triangular G with G·Gᵀ = A for SPD A.
pub fn cholesky_sparse(a: &SparseMatrix) -> Result<SparseMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch("cholesky on non-square matrix".into()));
    }
    let mut bw = 0usize;
    for i in 0..n {
        let (cols, _) = a.row(i);
        if let Some(&first) = cols.first() {
            if first < i {
                bw = bw.max(i - first);
            }
        }
    }

    // band[i][d] holds entry (i, i-d), d = 0..=bw
    let mut band = vec![0.0; n * (bw + 1)];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j <= i {
                band[i * (bw + 1) + (i - j)] = v;
            }
        }
    }

    for j in 0..n {
        let mut d = band[j * (bw + 1)];
        let lo = j.saturating_sub(bw);
        for k in lo..j {
            let l_jk = band[j * (bw + 1) + (j - k)];
            d -= l_jk * l_jk;
        }
        if d <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        let d = d.sqrt();
        band[j * (bw + 1)] = d;
        let hi = (j + bw).min(n - 1);
        for i in j + 1..=hi {
            let mut s = band[i * (bw + 1) + (i - j)];
            let lo_i = i.saturating_sub(bw).max(lo);
            for k in lo_i..j {
                s -= band[i * (bw + 1) + (i - k)] * band[j * (bw + 1) + (j - k)];
            }
            band[i * (bw + 1) + (i - j)] = s / d;
        }
    }

    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    row_offsets.push(0);
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        for j in lo..=i {
            let v = band[i * (bw + 1) + (i - j)];
            if v != 0.0 {
                col_indices.push(j);
                values.push(v);
            }
        }
        row_offsets.push(col_indices.len());
    }
    SparseMatrix::from_parts(n, n, row_offsets, col_indices, values, false)
}

/// Forward substitution G y = b for a lower-triangular CSR factor.
pub fn solve_lower(g: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = g.nrows();
    if b.len() != n {
        return Err(Error::DimensionMismatch("solve_lower rhs length".into()));
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let (cols, vals) = g.row(i);
        let mut s = b[i];
        let mut diag = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j < i {
                s -= v * y[j];
            } else if j == i {
                diag = v;
            }
        }
        y[i] = s / diag;
    }
    Ok(y)
}
