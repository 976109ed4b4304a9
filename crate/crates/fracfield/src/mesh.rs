//! Uniform tensor-product meshes on (0,1)^d and Galerkin assembly for
//! L = κ² − Δ with homogeneous Dirichlet boundary conditions.
//!
//! Elements are tensor-product multilinear (Q1) on the uniform grid; in
//! d = 1 these are the usual piecewise linear hat functions. Dirichlet
//! conditions are imposed by assembling over interior nodes only, and
//! the d-dimensional matrices are Kronecker products of the exact 1D
//! mass and stiffness matrices.

use crate::error::{Error, Result};
use crate::sparse::{cg_solve, SparseMatrix};

/// Uniform grid on (0,1)^d with n subintervals per axis.
///
/// The mesh diameter is the cell diagonal h = √d / n; interior nodes are
/// indexed lexicographically with the last axis fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mesh {
    dim: usize,
    n: usize,
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Subintervals per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Element diameter h = √dim / n.
    pub fn diameter(&self) -> f64 {
        (self.dim as f64).sqrt() / self.n as f64
    }

    /// Grid spacing 1/n along each axis.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Interior nodes per axis, n − 1.
    pub fn nodes_per_axis(&self) -> usize {
        self.n - 1
    }

    /// Total interior node count N_h = (n−1)^dim.
    pub fn interior_nodes(&self) -> usize {
        self.nodes_per_axis().pow(self.dim as u32)
    }

    /// Per-axis indices (1-based, in 1..=n−1) of a lexicographic index.
    pub fn multi_index(&self, index: usize) -> [usize; 3] {
        let m = self.nodes_per_axis();
        debug_assert!(index < self.interior_nodes());
        let mut mi = [0usize; 3];
        let mut rest = index;
        for axis in (0..self.dim).rev() {
            mi[axis] = rest % m + 1;
            rest /= m;
        }
        mi
    }

    /// Inverse of [`multi_index`].
    pub fn lex_index(&self, mi: &[usize]) -> usize {
        let m = self.nodes_per_axis();
        let mut idx = 0usize;
        for axis in 0..self.dim {
            debug_assert!((1..self.n).contains(&mi[axis]));
            idx = idx * m + (mi[axis] - 1);
        }
        idx
    }

    /// Coordinates of an interior node; unused axes are zero.
    pub fn node_coord(&self, index: usize) -> [f64; 3] {
        let mi = self.multi_index(index);
        let w = self.spacing();
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = mi[axis] as f64 * w;
        }
        x
    }
}

/// Builds the mesh, checking dim ∈ {1,2,3} and n ≥ 2.
pub fn build_mesh(dim: usize, n: usize) -> Result<Mesh> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidParameter(format!(
            "mesh dimension {dim} not in {{1,2,3}}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "mesh needs at least 2 subintervals per axis, got {n}"
        )));
    }
    Ok(Mesh { dim, n })
}

/// Assembled Galerkin matrices of L = κ² − Δ on the interior nodes.
#[derive(Debug, Clone)]
pub struct FemMatrices {
    pub mass: SparseMatrix,
    pub stiffness_laplace: SparseMatrix,
    pub operator_matrix: SparseMatrix,
    pub kappa: f64,
}

/// Exact 1D interior mass matrix (w/6)·tridiag(1,4,1).
fn mass_1d(m: usize, w: f64) -> SparseMatrix {
    SparseMatrix::tridiagonal(m, w / 6.0, 4.0 * w / 6.0)
}

/// Exact 1D interior stiffness matrix (1/w)·tridiag(−1,2,−1).
fn stiffness_1d(m: usize, w: f64) -> SparseMatrix {
    SparseMatrix::tridiagonal(m, -1.0 / w, 2.0 / w)
}

/// Assembles mass, Laplace stiffness and the operator matrix κ²M + K.
pub fn assemble(mesh: &Mesh, kappa: f64) -> Result<FemMatrices> {
    if kappa < 0.0 {
        return Err(Error::InvalidParameter(format!("kappa {kappa} negative")));
    }
    let m = mesh.nodes_per_axis();
    let w = mesh.spacing();
    let m1 = mass_1d(m, w);
    let k1 = stiffness_1d(m, w);

    let mut mass = m1.clone();
    for _ in 1..mesh.dim() {
        mass = mass.kron(&m1);
    }

    let mut stiffness: Option<SparseMatrix> = None;
    for axis in 0..mesh.dim() {
        let mut term: Option<SparseMatrix> = None;
        for a in 0..mesh.dim() {
            let factor = if a == axis { &k1 } else { &m1 };
            term = Some(match term {
                None => factor.clone(),
                Some(t) => t.kron(factor),
            });
        }
        let term = term.unwrap();
        stiffness = Some(match stiffness {
            None => term,
            Some(s) => s.linear_combination(1.0, &term, 1.0)?,
        });
    }
    let stiffness_laplace = stiffness.unwrap();
    let operator_matrix = mass.linear_combination(kappa * kappa, &stiffness_laplace, 1.0)?;

    Ok(FemMatrices {
        mass,
        stiffness_laplace,
        operator_matrix,
        kappa,
    })
}

// Gauss-Legendre nodes/weights on (0,1), six points per axis per cell:
// exact for integrands of degree <= 11, so degree-9 data times the
// multilinear hat is integrated exactly.
#[allow(clippy::excessive_precision)]
const GL_NODES: [f64; 6] = [
    0.033_765_242_898_423_986,
    0.169_395_306_766_867_74,
    0.380_690_406_958_401_55,
    0.619_309_593_041_598_5,
    0.830_604_693_233_132_3,
    0.966_234_757_101_576,
];
#[allow(clippy::excessive_precision)]
const GL_WEIGHTS: [f64; 6] = [
    0.085_662_246_189_585_17,
    0.180_380_786_524_069_3,
    0.233_956_967_286_345_52,
    0.233_956_967_286_345_52,
    0.180_380_786_524_069_3,
    0.085_662_246_189_585_17,
];

/// Load vector entries ⟨f, φ_i⟩ by per-cell tensor Gauss-Legendre
/// quadrature, for f evaluable on the open cube.
pub fn load_vector_from_function<F>(mesh: &Mesh, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let d = mesh.dim();
    let n = mesh.n();
    let m = mesh.nodes_per_axis();
    let w = mesh.spacing();
    let mut load = vec![0.0; mesh.interior_nodes()];

    let cells = n.pow(d as u32);
    let points = GL_NODES.len().pow(d as u32);
    let corners = 1usize << d;

    for cell in 0..cells {
        let mut c = [0usize; 3];
        let mut rest = cell;
        for axis in (0..d).rev() {
            c[axis] = rest % n;
            rest /= n;
        }
        for p in 0..points {
            let mut q = [0usize; 3];
            let mut rest = p;
            for axis in (0..d).rev() {
                q[axis] = rest % GL_NODES.len();
                rest /= GL_NODES.len();
            }
            let mut x = [0.0f64; 3];
            let mut weight = 1.0;
            for axis in 0..d {
                x[axis] = (c[axis] as f64 + GL_NODES[q[axis]]) * w;
                weight *= GL_WEIGHTS[q[axis]] * w;
            }
            let fx = f(&x[..d]) * weight;
            if fx == 0.0 {
                continue;
            }
            for corner in 0..corners {
                let mut shape = 1.0;
                let mut mi = [0usize; 3];
                let mut interior = true;
                for axis in 0..d {
                    let hi = (corner >> axis) & 1 == 1;
                    let xi = GL_NODES[q[axis]];
                    shape *= if hi { xi } else { 1.0 - xi };
                    let node = c[axis] + usize::from(hi);
                    if node == 0 || node == n {
                        interior = false;
                        break;
                    }
                    mi[axis] = node;
                }
                if interior {
                    let mut idx = 0usize;
                    for axis in 0..d {
                        idx = idx * m + (mi[axis] - 1);
                    }
                    load[idx] += fx * shape;
                }
            }
        }
    }
    load
}

/// Coefficients of the H-orthogonal projection onto V_h: solves M x = load.
pub fn project_onto_vh(fem: &FemMatrices, load: &[f64]) -> Result<Vec<f64>> {
    let n = fem.mass.nrows();
    cg_solve(&fem.mass, load, 1e-12, 10 * n + 100)
}

/// The L₂ norm √(vᵀ M v) of the FEM function with coefficients v.
pub fn l2_error_norm(fem: &FemMatrices, v: &[f64]) -> Result<f64> {
    let mv = fem.mass.mul_vec(v)?;
    let sq: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
    Ok(sq.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_examples_from_node_table() {
        let m = build_mesh(1, 128).unwrap();
        assert_eq!(m.interior_nodes(), 127);
        assert_eq!(m.diameter(), 1.0 / 128.0);

        let m = build_mesh(2, 32).unwrap();
        assert_eq!(m.interior_nodes(), 961);
        assert!((m.diameter() - 2.0f64.sqrt() / 32.0).abs() < 1e-16);

        let m = build_mesh(3, 10).unwrap();
        assert_eq!(m.interior_nodes(), 729);
    }

    #[test]
    fn mesh_rejects_bad_input() {
        assert!(build_mesh(0, 8).is_err());
        assert!(build_mesh(4, 8).is_err());
        assert!(build_mesh(2, 1).is_err());
    }

    #[test]
    fn diameter_decreasing_in_n() {
        let mut last = f64::INFINITY;
        for n in [2, 3, 5, 8, 13, 21] {
            let h = build_mesh(2, n).unwrap().diameter();
            assert!(h < last);
            last = h;
        }
    }

    #[test]
    fn lex_index_roundtrip() {
        let mesh = build_mesh(3, 5).unwrap();
        for idx in 0..mesh.interior_nodes() {
            let mi = mesh.multi_index(idx);
            assert_eq!(mesh.lex_index(&mi[..3]), idx);
        }
        // last axis fastest
        assert_eq!(mesh.multi_index(1), [1, 1, 2]);
    }

    #[test]
    fn one_dimensional_matrices_exact() {
        let mesh = build_mesh(1, 4).unwrap();
        let fem = assemble(&mesh, 0.0).unwrap();
        let h = 0.25;
        for i in 0..3 {
            assert!((fem.mass.get(i, i) - 4.0 * h / 6.0).abs() < 1e-16);
            assert!((fem.stiffness_laplace.get(i, i) - 2.0 / h).abs() < 1e-16);
        }
        assert!((fem.mass.get(0, 1) - h / 6.0).abs() < 1e-16);
        assert!((fem.stiffness_laplace.get(0, 1) + 1.0 / h).abs() < 1e-16);
        assert_eq!(fem.mass.get(0, 2), 0.0);
    }

    #[test]
    fn single_interior_node_2d() {
        let mesh = build_mesh(2, 2).unwrap();
        let fem = assemble(&mesh, 0.0).unwrap();
        assert_eq!(fem.mass.nrows(), 1);
        let expect = (4.0 * 0.5 / 6.0) * (4.0 * 0.5 / 6.0);
        assert!((fem.mass.get(0, 0) - expect).abs() < 1e-15);
        assert!((expect - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn operator_matrix_is_shifted_stiffness() {
        let mesh = build_mesh(2, 4).unwrap();
        let kappa = 0.5;
        let fem = assemble(&mesh, kappa).unwrap();
        for i in 0..fem.mass.nrows() {
            for j in 0..fem.mass.nrows() {
                let expect = kappa * kappa * fem.mass.get(i, j) + fem.stiffness_laplace.get(i, j);
                assert!((fem.operator_matrix.get(i, j) - expect).abs() < 1e-15);
            }
        }
        assert!(fem.mass.is_value_symmetric(0.0));
        assert!(fem.stiffness_laplace.is_value_symmetric(0.0));
    }

    #[test]
    fn interior_stiffness_rows_sum_to_zero() {
        // gradient partition-of-unity: rows of K over nodes whose full
        // stencil is interior sum to zero
        let mesh = build_mesh(2, 6).unwrap();
        let fem = assemble(&mesh, 0.0).unwrap();
        let m = mesh.nodes_per_axis();
        for idx in 0..mesh.interior_nodes() {
            let mi = mesh.multi_index(idx);
            let inner = (0..2).all(|a| mi[a] >= 2 && mi[a] < m);
            if inner {
                let (_, vals) = fem.stiffness_laplace.row(idx);
                let sum: f64 = vals.iter().sum();
                assert!(sum.abs() < 1e-12, "row {idx} sums to {sum}");
            }
        }
    }

    #[test]
    fn load_vector_examples() {
        let mesh = build_mesh(1, 4).unwrap();
        let zero = load_vector_from_function(&mesh, |_| 0.0);
        assert_eq!(zero, vec![0.0; 3]);

        let ones = load_vector_from_function(&mesh, |_| 1.0);
        for v in &ones {
            assert!((v - 0.25).abs() < 1e-14);
        }

        let linear = load_vector_from_function(&mesh, |x| x[0]);
        for (i, v) in linear.iter().enumerate() {
            let xi = (i + 1) as f64 * 0.25;
            assert!((v - xi * 0.25).abs() < 1e-14, "node {i}");
        }
    }

    #[test]
    fn load_vector_exact_for_degree_nine() {
        // ∫ x^9 φ_i dx integrated exactly; reference from the antiderivative
        // of the two linear pieces of the hat.
        let mesh = build_mesh(1, 4).unwrap();
        let load = load_vector_from_function(&mesh, |x| x[0].powi(9));
        let w = 0.25;
        let prim = |a: f64, b: f64, c0: f64, c1: f64| {
            // ∫_a^b x^9 (c0 + c1 x) dx
            let f = |x: f64| c0 * x.powi(10) / 10.0 + c1 * x.powi(11) / 11.0;
            f(b) - f(a)
        };
        for i in 1..=3usize {
            let xi = i as f64 * w;
            // rising piece (x - x_{i-1})/w on [x_{i-1}, x_i], falling piece (x_{i+1} - x)/w
            let expect = prim(xi - w, xi, -(xi - w) / w, 1.0 / w) + prim(xi, xi + w, (xi + w) / w, -1.0 / w);
            assert!(
                (load[i - 1] - expect).abs() <= 1e-15,
                "node {i}: {} vs {expect}",
                load[i - 1]
            );
        }
    }

    #[test]
    fn projection_examples() {
        let mesh = build_mesh(2, 4).unwrap();
        let fem = assemble(&mesh, 0.5).unwrap();
        let n = fem.mass.nrows();

        let zero = project_onto_vh(&fem, &vec![0.0; n]).unwrap();
        assert_eq!(zero, vec![0.0; n]);

        // projection of a V_h member is itself
        let c: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let load = fem.mass.mul_vec(&c).unwrap();
        let back = project_onto_vh(&fem, &load).unwrap();
        for i in 0..n {
            assert!((back[i] - c[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn projection_of_constant_matches_dense_solve() {
        use crate::sparse::DenseMatrix;
        let mesh = build_mesh(1, 4).unwrap();
        let fem = assemble(&mesh, 0.0).unwrap();
        let load = load_vector_from_function(&mesh, |_| 1.0);
        let x = project_onto_vh(&fem, &load).unwrap();
        let dense = DenseMatrix::from_sparse(&fem.mass);
        let x_ref = dense.solve_spd(&load).unwrap();
        for i in 0..3 {
            assert!((x[i] - x_ref[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn l2_norm_examples() {
        let mesh = build_mesh(1, 4).unwrap();
        let fem = assemble(&mesh, 0.0).unwrap();
        assert_eq!(l2_error_norm(&fem, &[0.0, 0.0, 0.0]).unwrap(), 0.0);

        let e1 = l2_error_norm(&fem, &[1.0, 0.0, 0.0]).unwrap();
        assert!((e1 - (1.0f64 / 6.0).sqrt()).abs() < 1e-14);

        let v = [0.3, -1.2, 0.7];
        let scaled: Vec<f64> = v.iter().map(|x| -3.0 * x).collect();
        let a = l2_error_norm(&fem, &v).unwrap();
        let b = l2_error_norm(&fem, &scaled).unwrap();
        assert!((b - 3.0 * a).abs() < 1e-13);

        assert!(l2_error_norm(&fem, &[1.0]).is_err());
    }

    #[test]
    fn rayleigh_quotient_bounds_first_eigenvalue() {
        // min-max: the interpolant of sin(πx) gives an upper-bound quotient,
        // so λ₁ = κ² + π² is below it
        let mesh = build_mesh(1, 16).unwrap();
        let kappa = 0.5;
        let fem = assemble(&mesh, kappa).unwrap();
        let v: Vec<f64> = (0..mesh.interior_nodes())
            .map(|i| (std::f64::consts::PI * mesh.node_coord(i)[0]).sin())
            .collect();
        let av = fem.operator_matrix.mul_vec(&v).unwrap();
        let mv = fem.mass.mul_vec(&v).unwrap();
        let num: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        let den: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
        let lambda1 = kappa * kappa + std::f64::consts::PI * std::f64::consts::PI;
        assert!(num / den >= lambda1);
        assert!(num / den <= lambda1 * 1.01);
    }
}
