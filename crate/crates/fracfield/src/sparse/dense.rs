//! Dense symmetric linear algebra used for the reference oracles.
//!
//! Everything here is O(n³) and gated behind a configurable dimension
//! cap: the dense eigensolver exists to validate the sparse path on
//! small meshes, not to compete with it.

use super::csr::SparseMatrix;
use crate::error::{Error, Result};

/// Dimension cap for the dense reference routines.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_sparse(a: &SparseMatrix) -> Self {
        let mut m = DenseMatrix::zeros(a.nrows(), a.ncols());
        for i in 0..a.nrows() {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols);
            data.extend_from_slice(r);
        }
        DenseMatrix { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let row = &self.data[i * self.ncols..(i + 1) * self.ncols];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for j in i + 1..self.ncols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Lower Cholesky factor, A = L·Lᵀ.
    pub fn cholesky_lower(&self) -> Result<DenseMatrix> {
        let n = self.nrows;
        if self.ncols != n {
            return Err(Error::DimensionMismatch("cholesky on non-square matrix".into()));
        }
        let mut l = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(Error::NotPositiveDefinite);
                    }
                    l.set(i, i, s.sqrt());
                } else {
                    l.set(i, j, s / l.get(j, j));
                }
            }
        }
        Ok(l)
    }

    /// Solves L y = b for lower-triangular self.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.nrows;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.get(i, k) * y[k];
            }
            y[i] = s / self.get(i, i);
        }
        y
    }

    /// Solves Lᵀ x = b for lower-triangular self.
    pub fn solve_lower_transposed(&self, b: &[f64]) -> Vec<f64> {
        let n = self.nrows;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.get(k, i) * x[k];
            }
            x[i] = s / self.get(i, i);
        }
        x
    }

    /// SPD solve through the Cholesky factor.
    pub fn solve_spd(&self, b: &[f64]) -> Result<Vec<f64>> {
        let l = self.cholesky_lower()?;
        Ok(l.solve_lower_transposed(&l.solve_lower(b)))
    }
}

/// Eigenpairs of a (generalized) symmetric problem, eigenvalues
/// nondecreasing, eigenvector j stored as column j.
#[derive(Debug, Clone)]
pub struct DenseEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

/// Cyclic Jacobi rotations for a dense symmetric matrix.
///
/// Returns unsorted eigenvalues and the accumulated rotation matrix
/// (columns are eigenvectors). Sweeps until the off-diagonal Frobenius
/// mass falls below 1e-30 relative to the diagonal mass.
fn jacobi_eigen(mut a: DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.nrows();
    let mut v = DenseMatrix::identity(n);
    let max_sweeps = 50;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += a.get(i, i) * a.get(i, i);
            for j in i + 1..n {
                off += 2.0 * a.get(i, j) * a.get(i, j);
            }
        }
        if off <= 1e-30 * (diag + off).max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                // skip rotations that no longer change the matrix
                if apq.abs() <= f64::EPSILON * 0.5 * (app.abs() + aqq.abs()) {
                    a.set(p, q, 0.0);
                    a.set(q, p, 0.0);
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let vals = (0..n).map(|i| a.get(i, i)).collect();
    (vals, v)
}

/// Eigenpairs of the standard symmetric problem A v = λ v, sorted.
pub fn symmetric_eig(a: &DenseMatrix) -> Result<DenseEig> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch("symmetric_eig on non-square".into()));
    }
    let (vals, vecs) = jacobi_eigen(a.clone());
    Ok(sort_eig(vals, vecs))
}

fn sort_eig(vals: Vec<f64>, vecs: DenseMatrix) -> DenseEig {
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(vals[src]);
        for r in 0..n {
            eigenvectors.set(r, dst, vecs.get(r, src));
        }
    }
    DenseEig {
        eigenvalues,
        eigenvectors,
    }
}

/// Generalized symmetric eigenproblem A·v = λ·M·v with M SPD.
///
/// Reduced via the Cholesky factor of M to a standard symmetric problem
/// and solved by cyclic Jacobi rotations; eigenvectors come back
/// M-orthonormal (VᵀMV = I) with eigenvalues nondecreasing.
pub fn generalized_eig_dense(a: &DenseMatrix, m: &DenseMatrix) -> Result<DenseEig> {
    generalized_eig_dense_capped(a, m, DEFAULT_DENSE_CAP)
}

pub fn generalized_eig_dense_capped(
    a: &DenseMatrix,
    m: &DenseMatrix,
    cap: usize,
) -> Result<DenseEig> {
    let n = a.nrows();
    if a.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(
            "generalized_eig_dense: A and M must be square of equal size".into(),
        ));
    }
    if n > cap {
        return Err(Error::DenseCapExceeded { n, cap });
    }
    let g = m.cholesky_lower()?;
    // C = G⁻¹ A G⁻ᵀ, formed column by column through triangular solves
    let mut c = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let y = g.solve_lower(&a.column(j));
        for i in 0..n {
            c.set(i, j, y[i]);
        }
    }
    let mut ct = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| c.get(j, i)).collect();
        let y = g.solve_lower(&col);
        for i in 0..n {
            ct.set(i, j, y[i]);
        }
    }
    // symmetrize against roundoff
    for i in 0..n {
        for j in i + 1..n {
            let s = 0.5 * (ct.get(i, j) + ct.get(j, i));
            ct.set(i, j, s);
            ct.set(j, i, s);
        }
    }
    let (vals, w) = jacobi_eigen(ct);
    // map eigenvectors back: v = G⁻ᵀ w
    let mut vecs = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let x = g.solve_lower_transposed(&w.column(j));
        for i in 0..n {
            vecs.set(i, j, x[i]);
        }
    }
    Ok(sort_eig(vals, vecs))
}

/// Operator norm sup ‖Tφ‖_H / ‖φ‖_H of an M-self-adjoint map on the
/// FEM coefficient space, where ‖φ‖²_H = cᵀMc for coefficients c.
///
/// The map is passed by its action on coefficient vectors; its matrix T
/// is assembled column by column, transformed to S = Gᵀ·T·G⁻ᵀ with
/// M = G·Gᵀ, and the norm is the largest absolute eigenvalue of S.
/// If S fails the symmetry check beyond 1e-8 the map was not
/// self-adjoint and an error is returned.
pub fn m_operator_norm<F>(t_action: F, m: &DenseMatrix) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    m_operator_norm_capped(t_action, m, DEFAULT_DENSE_CAP)
}

pub fn m_operator_norm_capped<F>(t_action: F, m: &DenseMatrix, cap: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch("m_operator_norm: M must be square".into()));
    }
    if n > cap {
        return Err(Error::DenseCapExceeded { n, cap });
    }
    let g = m.cholesky_lower()?;
    // S column j: Gᵀ T G⁻ᵀ e_j
    let mut s = DenseMatrix::zeros(n, n);
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        let x = g.solve_lower_transposed(&unit);
        unit[j] = 0.0;
        let tx = t_action(&x);
        assert_eq!(tx.len(), n, "t_action changed the dimension");
        // Gᵀ tx
        for i in 0..n {
            let mut acc = 0.0;
            for k in i..n {
                acc += g.get(k, i) * tx[k];
            }
            s.set(i, j, acc);
        }
    }
    let asym = s.max_asymmetry();
    let scale = s.max_abs().max(1.0);
    if asym > 1e-8 * scale {
        return Err(Error::NotSelfAdjoint(asym));
    }
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (s.get(i, j) + s.get(j, i));
            s.set(i, j, v);
            s.set(j, i, v);
        }
    }
    let eig = symmetric_eig(&s)?;
    Ok(eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_generalized_problem() {
        let a = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let m = DenseMatrix::identity(2);
        let eig = generalized_eig_dense(&a, &m).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 2.0).abs() < 1e-14);
        assert!((eig.eigenvectors.get(0, 0).abs() - 1.0).abs() < 1e-12);
        assert!((eig.eigenvectors.get(1, 1).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fem_pair_matches_closed_form_spectrum() {
        // 1D P1 pair with kappa = 0, n = 4: the discrete eigenvalues have
        // the closed form (6/h²)(1-cos(jπh))/(2+cos(jπh)). The closed form
        // itself is validated by evaluating det(K - λM) of the 3x3 pencil.
        let n = 4usize;
        let m_dim = n - 1;
        let h = 1.0 / n as f64;
        let mass = SparseMatrix::tridiagonal(m_dim, h / 6.0, 4.0 * h / 6.0);
        let stiff = SparseMatrix::tridiagonal(m_dim, -1.0 / h, 2.0 / h);
        let md = DenseMatrix::from_sparse(&mass);
        let kd = DenseMatrix::from_sparse(&stiff);

        let eig = generalized_eig_dense(&kd, &md).unwrap();
        for j in 1..=m_dim {
            let th = (j as f64) * std::f64::consts::PI * h;
            let closed = (6.0 / (h * h)) * (1.0 - th.cos()) / (2.0 + th.cos());
            assert!(
                (eig.eigenvalues[j - 1] - closed).abs() <= 1e-9 * closed,
                "j={j}: {} vs {}",
                eig.eigenvalues[j - 1],
                closed
            );
            // brute-force characteristic polynomial check: det(K - λM) = 0
            let det3 = |l: f64| {
                let e = |i: usize, j: usize| kd.get(i, j) - l * md.get(i, j);
                e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
                    - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                    + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
            };
            assert!(det3(closed).abs() <= 1e-6 * det3(0.0).abs());
        }
    }

    #[test]
    fn eigenvectors_m_orthonormal() {
        let n = 8usize;
        let m_dim = n - 1;
        let h = 1.0 / n as f64;
        let mass = SparseMatrix::tridiagonal(m_dim, h / 6.0, 4.0 * h / 6.0);
        let stiff = SparseMatrix::tridiagonal(m_dim, -1.0 / h, 2.0 / h);
        let a = mass.linear_combination(0.25, &stiff, 1.0).unwrap();
        let md = DenseMatrix::from_sparse(&mass);
        let ad = DenseMatrix::from_sparse(&a);
        let eig = generalized_eig_dense(&ad, &md).unwrap();
        for i in 0..m_dim {
            let vi = eig.eigenvectors.column(i);
            let mvi = md.mul_vec(&vi);
            for j in 0..m_dim {
                let vj = eig.eigenvectors.column(j);
                let ip: f64 = vj.iter().zip(&mvi).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() <= 1e-10, "({i},{j}): {ip}");
            }
        }
        for w in eig.eigenvalues.windows(2) {
            assert!(w[0] <= w[1]);
        }
        // residual of the pencil: A v = λ M v
        for j in 0..m_dim {
            let v = eig.eigenvectors.column(j);
            let av = ad.mul_vec(&v);
            let mv = md.mul_vec(&v);
            for i in 0..m_dim {
                let r = av[i] - eig.eigenvalues[j] * mv[i];
                assert!(r.abs() <= 1e-9 * eig.eigenvalues[j], "pencil residual ({i},{j})");
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let a = DenseMatrix::identity(5);
        let m = DenseMatrix::identity(5);
        assert!(matches!(
            generalized_eig_dense_capped(&a, &m, 4),
            Err(Error::DenseCapExceeded { n: 5, cap: 4 })
        ));
    }

    #[test]
    fn operator_norm_identity_and_scaling() {
        let m1 = SparseMatrix::tridiagonal(7, 1.0 / 48.0, 4.0 / 48.0);
        let m = DenseMatrix::from_sparse(&m1);
        let norm = m_operator_norm(|x| x.to_vec(), &m).unwrap();
        assert!((norm - 1.0).abs() < 1e-12);
        let norm = m_operator_norm(|x| x.iter().map(|v| -2.5 * v).collect(), &m).unwrap();
        assert!((norm - 2.5).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_rejects_non_self_adjoint() {
        let m = DenseMatrix::identity(3);
        // a shear is not symmetric w.r.t. the identity mass
        let res = m_operator_norm(
            |x| vec![x[0] + x[1], x[1], x[2]],
            &m,
        );
        assert!(matches!(res, Err(Error::NotSelfAdjoint(_))));
    }
}
