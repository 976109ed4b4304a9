//! Jacobi-preconditioned conjugate gradients for SPD systems.

use super::csr::SparseMatrix;
use crate::error::{Error, Result};

/// Solves A x = b for symmetric positive definite A to a relative
/// residual `rel_tol` in the Euclidean norm, starting from x = 0.
///
/// Uses the preconditioned Hestenes-Stiefel recurrence with the diagonal
/// (Jacobi) preconditioner. Convergence is certified against the true
/// residual, not only the recurrence residual. Deterministic: fixed
/// iteration order, no reductions that depend on thread count.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch("cg_solve needs a square matrix".into()));
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "cg_solve: rhs length {} against {} rows",
            b.len(),
            n
        )));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cg_solve: rel_tol {rel_tol} outside (0,1)"
        )));
    }

    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let target = rel_tol * b_norm;

    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut achieved = b_norm;

    for _ in 0..max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        achieved = norm2(&r);
        if achieved <= target {
            // Recurrence residual can drift; certify with the true one.
            a.mul_vec_into(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            achieved = norm2(&r);
            if achieved <= target {
                return Ok(x);
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    Err(Error::NoConvergence {
        max_iter,
        achieved: achieved / b_norm,
        target: rel_tol,
    })
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{NormalStream, StreamTag};

    #[test]
    fn identity_system() {
        let a = SparseMatrix::identity(2);
        let x = cg_solve(&a, &[5.0, -1.0], 1e-12, 10).unwrap();
        assert_eq!(x, vec![5.0, -1.0]);
    }

    #[test]
    fn zero_rhs() {
        let a = SparseMatrix::tridiagonal(5, -1.0, 2.1);
        let x = cg_solve(&a, &[0.0; 5], 1e-10, 50).unwrap();
        assert_eq!(x, vec![0.0; 5]);
    }

    #[test]
    fn max_iter_exhausted_reports_residual() {
        let a = SparseMatrix::tridiagonal(64, -1.0, 2.0);
        let b = vec![1.0; 64];
        match cg_solve(&a, &b, 1e-12, 2) {
            Err(Error::NoConvergence { achieved, .. }) => assert!(achieved > 0.0),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    // Dense Cholesky oracle on the 1D operator matrix kappa^2 M + K.
    #[test]
    fn matches_dense_cholesky_on_fem_operator() {
        let n = 8usize;
        let m = n - 1;
        let h = 1.0 / n as f64;
        let kappa: f64 = 0.5;
        let mass = SparseMatrix::tridiagonal(m, h / 6.0, 4.0 * h / 6.0);
        let stiff = SparseMatrix::tridiagonal(m, -1.0 / h, 2.0 / h);
        let a = mass.linear_combination(kappa * kappa, &stiff, 1.0).unwrap();

        let stream = NormalStream::new(11, StreamTag::Test, 0);
        let mut b = vec![0.0; m];
        stream.fill_normals(&mut b);

        let x = cg_solve(&a, &b, 1e-12, 10 * m).unwrap();

        // dense Cholesky solve, written out directly as the oracle
        let mut dense = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                dense[i][j] = a.get(i, j);
            }
        }
        let mut l = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..=i {
                let mut s = dense[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        let mut y = vec![0.0; m];
        for i in 0..m {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i][k] * y[k];
            }
            y[i] = s / l[i][i];
        }
        let mut x_ref = vec![0.0; m];
        for i in (0..m).rev() {
            let mut s = y[i];
            for k in i + 1..m {
                s -= l[k][i] * x_ref[k];
            }
            x_ref[i] = s / l[i][i];
        }

        for i in 0..m {
            assert!((x[i] - x_ref[i]).abs() < 1e-9, "component {i}");
        }
    }
}
