//! Sinc quadrature of the inverse fractional operator.
//!
//! The Balakrishnan integral L^{−β} = (2 sin(πβ)/π) ∫ e^{2βy}
//! (I + e^{2y} L)^{−1} dy is discretized on the equidistant grid
//! y_ℓ = ℓk, ℓ = −K⁻..K⁺, with K± chosen so both truncation tails decay
//! like the quadrature error e^{−π²/(2k)}. In coefficient space each
//! resolvent applied to a field with load vector b is the sparse SPD
//! solve (M + e^{2y} A) x = b.

use crate::error::{Error, Result};
use crate::exec::{map_range, map_range_seq};
use crate::mesh::FemMatrices;
use crate::sparse::{cg_solve, generalized_eig_dense, m_operator_norm, DenseEig, DenseMatrix};

const PI: f64 = std::f64::consts::PI;

/// Relative CG tolerance for the resolvent solves; far below the
/// O(e^{−π²/(2k)}) quadrature error at every step size used here.
pub const RESOLVENT_REL_TOL: f64 = 1e-10;

/// Sinc quadrature grid for one (β, k) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub beta: f64,
    pub k: f64,
    pub k_minus: usize,
    pub k_plus: usize,
    /// 2k sin(πβ)/π
    pub prefactor: f64,
}

impl QuadratureGrid {
    /// K⁻ + K⁺ + 1.
    pub fn node_count(&self) -> usize {
        self.k_minus + self.k_plus + 1
    }

    /// Quadrature nodes y_ℓ = ℓ·k in ascending order of ℓ.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (-(self.k_minus as i64)..=self.k_plus as i64).map(move |l| l as f64 * self.k)
    }
}

/// Builds the grid with K⁻ = ⌈π²/(4βk²)⌉ and K⁺ = ⌈π²/(4(1−β)k²)⌉.
pub fn build_grid(beta: f64, k: f64) -> Result<QuadratureGrid> {
    if !(0.0 < beta && beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "beta {beta} outside (0,1)"
        )));
    }
    if k <= 0.0 {
        return Err(Error::InvalidParameter(format!("step size k {k} not positive")));
    }
    let k_minus = (PI * PI / (4.0 * beta * k * k)).ceil() as usize;
    let k_plus = (PI * PI / (4.0 * (1.0 - beta) * k * k)).ceil() as usize;
    Ok(QuadratureGrid {
        beta,
        k,
        k_minus,
        k_plus,
        prefactor: 2.0 * k * (PI * beta).sin() / PI,
    })
}

/// How the quadrature step k is tied to the mesh width h.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationMode {
    /// Step bound of the strong error estimate, taken with equality.
    Strong,
    /// Step bound of the weak-type error estimate, taken with equality.
    Weak,
    /// k = 1/(β |ln h|), the choice of the reported experiments.
    Experiment,
}

impl std::str::FromStr for CalibrationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strong" => Ok(CalibrationMode::Strong),
            "weak" => Ok(CalibrationMode::Weak),
            "experiment" => Ok(CalibrationMode::Experiment),
            other => Err(Error::InvalidParameter(format!(
                "calibration mode '{other}' (expected strong|weak|experiment)"
            ))),
        }
    }
}

impl std::fmt::Display for CalibrationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CalibrationMode::Strong => "strong",
            CalibrationMode::Weak => "weak",
            CalibrationMode::Experiment => "experiment",
        })
    }
}

/// An h ↦ k rule: mode plus the eigenvalue growth exponent α (2/d on
/// the cube) and the problem parameters it depends on.
#[derive(Debug, Clone, Copy)]
pub struct Calibration {
    pub mode: CalibrationMode,
    pub alpha: f64,
    pub beta: f64,
    pub dim: usize,
}

impl Calibration {
    pub fn on_cube(mode: CalibrationMode, beta: f64, dim: usize) -> Self {
        Calibration {
            mode,
            alpha: 2.0 / dim as f64,
            beta,
            dim,
        }
    }

    pub fn k(&self, h: f64) -> Result<f64> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mesh width h {h} outside (0,1)"
            )));
        }
        if !(0.0 < self.beta && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta {} outside (0,1)",
                self.beta
            )));
        }
        let log_h = -h.ln();
        let d = self.dim as f64;
        let ab = self.alpha * self.beta;
        Ok(match self.mode {
            CalibrationMode::Experiment => 1.0 / (self.beta * log_h),
            CalibrationMode::Strong => PI * PI / (2.0 * d * ab * log_h),
            CalibrationMode::Weak => {
                let cap = if ab < 1.0 {
                    d * ab * log_h
                } else if ab == 1.0 {
                    d * log_h + log_h.ln().max(0.0)
                } else {
                    d * (2.0 * ab - 1.0) * log_h
                };
                PI * PI / (2.0 * cap)
            }
        })
    }
}

/// k for the cube problem (α = 2/d); see [`Calibration`].
pub fn calibrate_k(h: f64, beta: f64, dim: usize, mode: CalibrationMode) -> Result<f64> {
    Calibration::on_cube(mode, beta, dim).k(h)
}

// One resolvent contribution. For y <= 0 solve (M + e^{2y}A) x = b and
// weight by e^{2βy}; for y > 0 factor e^{2y} out of the matrix, solving
// (e^{-2y}M + A) instead, so that neither side can overflow. Both forms
// keep the system sparse SPD, and very negative nodes degenerate to the
// pure mass solve without being skipped.
fn resolvent_node(
    fem: &FemMatrices,
    beta: f64,
    y: f64,
    b: &[f64],
    max_iter: usize,
) -> Result<(f64, Vec<f64>)> {
    let mass = &fem.mass;
    let oper = &fem.operator_matrix;
    debug_assert!(mass.same_pattern_as(oper));
    let (c_mass, c_oper, log_weight) = if y <= 0.0 {
        (1.0, (2.0 * y).exp(), 2.0 * beta * y)
    } else {
        ((-2.0 * y).exp(), 1.0, -2.0 * (1.0 - beta) * y)
    };
    let values: Vec<f64> = mass
        .values()
        .iter()
        .zip(oper.values())
        .map(|(m, a)| c_mass * m + c_oper * a)
        .collect();
    let system = mass.with_same_pattern(values, true);
    let x = cg_solve(&system, b, RESOLVENT_REL_TOL, max_iter)?;
    Ok((log_weight.exp(), x))
}

fn apply_quadrature_impl(
    grid: &QuadratureGrid,
    fem: &FemMatrices,
    b: &[f64],
    sequential: bool,
) -> Result<Vec<f64>> {
    let n = fem.mass.nrows();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "load length {} against {} unknowns",
            b.len(),
            n
        )));
    }
    let max_iter = 10 * n + 100;
    let nodes: Vec<i64> = (-(grid.k_minus as i64)..=grid.k_plus as i64).collect();
    let mut acc = vec![0.0; n];
    // solve in parallel chunks, accumulate in fixed node order
    for chunk in nodes.chunks(32) {
        let solve = |i: usize| -> Result<(f64, Vec<f64>)> {
            let l = chunk[i];
            resolvent_node(fem, grid.beta, l as f64 * grid.k, b, max_iter).map_err(|e| {
                Error::ResolventSolve {
                    node: l,
                    source: Box::new(e),
                }
            })
        };
        let results = if sequential {
            map_range_seq(chunk.len(), solve)
        } else {
            map_range(chunk.len(), solve)
        };
        for r in results {
            let (weight, x) = r?;
            for (a, v) in acc.iter_mut().zip(&x) {
                *a += weight * v;
            }
        }
    }
    for a in acc.iter_mut() {
        *a *= grid.prefactor;
    }
    Ok(acc)
}

/// Applies Q^β to the field with load vector b, returning the
/// coefficient vector of prefactor · Σ_ℓ e^{2βy_ℓ} x_ℓ with
/// (M + e^{2y_ℓ} A) x_ℓ = b.
pub fn apply_quadrature(grid: &QuadratureGrid, fem: &FemMatrices, b: &[f64]) -> Result<Vec<f64>> {
    apply_quadrature_impl(grid, fem, b, false)
}

/// Sequential twin of [`apply_quadrature`]; same arithmetic, one thread.
pub fn apply_quadrature_seq(
    grid: &QuadratureGrid,
    fem: &FemMatrices,
    b: &[f64],
) -> Result<Vec<f64>> {
    apply_quadrature_impl(grid, fem, b, true)
}

/// Exact discrete fractional inverse through the generalized eigenpairs
/// of (A, M); the dense reference the quadrature is validated against.
pub struct DenseFracInverse {
    eig: DenseEig,
}

impl DenseFracInverse {
    pub fn new(fem: &FemMatrices) -> Result<Self> {
        let a = DenseMatrix::from_sparse(&fem.operator_matrix);
        let m = DenseMatrix::from_sparse(&fem.mass);
        Ok(DenseFracInverse {
            eig: generalized_eig_dense(&a, &m)?,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.eigenvalues
    }

    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        self.eig.eigenvectors.column(j)
    }

    /// u = Σ_j λ_{j,h}^{−β} (v_jᵀ b) v_j for a load vector b.
    pub fn apply(&self, beta: f64, b: &[f64]) -> Vec<f64> {
        let n = self.eig.eigenvalues.len();
        assert_eq!(b.len(), n);
        let mut u = vec![0.0; n];
        for j in 0..n {
            let v = self.eig.eigenvectors.column(j);
            let proj: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            let w = self.eig.eigenvalues[j].powf(-beta) * proj;
            for (ui, vi) in u.iter_mut().zip(&v) {
                *ui += w * vi;
            }
        }
        u
    }
}

/// One-shot form of [`DenseFracInverse::apply`]; β = 1 reproduces the
/// plain solve A u = b and is supported for testing.
pub fn dense_frac_inverse(fem: &FemMatrices, beta: f64, b: &[f64]) -> Result<Vec<f64>> {
    Ok(DenseFracInverse::new(fem)?.apply(beta, b))
}

/// ‖Q^β_{h,k} − L_h^{−β}‖ in the operator norm on V_h, via
/// [`m_operator_norm`]. The quadrature side runs on dense per-node
/// Cholesky solves so the measured discrepancy is free of iterative
/// solver noise; the fractional side is the eigen-expansion reference.
pub fn quadrature_discrepancy(fem: &FemMatrices, beta: f64, k: f64) -> Result<f64> {
    let grid = build_grid(beta, k)?;
    let m = DenseMatrix::from_sparse(&fem.mass);
    let a = DenseMatrix::from_sparse(&fem.operator_matrix);
    let n = m.nrows();

    let frac = DenseFracInverse::new(fem)?;

    // per-node dense Cholesky factors, shared across columns
    let mut factors = Vec::with_capacity(grid.node_count());
    for y in grid.nodes() {
        let (c_mass, c_oper, log_weight) = if y <= 0.0 {
            (1.0, (2.0 * y).exp(), 2.0 * beta * y)
        } else {
            ((-2.0 * y).exp(), 1.0, -2.0 * (1.0 - beta) * y)
        };
        let mut sys = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                sys.set(i, j, c_mass * m.get(i, j) + c_oper * a.get(i, j));
            }
        }
        factors.push((log_weight.exp(), sys.cholesky_lower()?));
    }

    let t_action = |c: &[f64]| -> Vec<f64> {
        let b = m.mul_vec(c);
        let mut q = vec![0.0; n];
        for (weight, l) in &factors {
            let x = l.solve_lower_transposed(&l.solve_lower(&b));
            for (qi, xi) in q.iter_mut().zip(&x) {
                *qi += weight * xi;
            }
        }
        for qi in q.iter_mut() {
            *qi *= grid.prefactor;
        }
        let exact = frac.apply(beta, &b);
        q.iter().zip(&exact).map(|(qe, ex)| qe - ex).collect()
    };
    m_operator_norm(t_action, &m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{assemble, build_mesh};
    use crate::rng::{NormalStream, StreamTag};

    #[test]
    fn grid_counts_match_node_table() {
        // (d=1, N_h=127, β=7/8): k = 1/(β ln 128), 408 nodes
        let k = calibrate_k(1.0 / 128.0, 0.875, 1, CalibrationMode::Experiment).unwrap();
        assert!((k - 0.2355).abs() < 1e-3);
        let g = build_grid(0.875, k).unwrap();
        assert_eq!((g.k_minus, g.k_plus, g.node_count()), (51, 356, 408));

        // (d=1, N_h=255, β=1/2): 77 nodes, symmetric
        let k = calibrate_k(1.0 / 256.0, 0.5, 1, CalibrationMode::Experiment).unwrap();
        assert!((k - 0.360674).abs() < 1e-5);
        let g = build_grid(0.5, k).unwrap();
        assert_eq!(g.node_count(), 77);
        assert_eq!(g.k_minus, g.k_plus);

        // (d=2, N_h=961, β=5/8): h = √2/32, 43 nodes
        let h = 2.0f64.sqrt() / 32.0;
        let k = calibrate_k(h, 0.625, 2, CalibrationMode::Experiment).unwrap();
        assert!((k - 0.512959).abs() < 1e-5);
        assert_eq!(build_grid(0.625, k).unwrap().node_count(), 43);
    }

    #[test]
    fn beta_symmetric_at_half() {
        for k in [0.2, 0.31, 0.47] {
            let g = build_grid(0.5, k).unwrap();
            assert_eq!(g.k_minus, g.k_plus);
            assert!(g.prefactor > 0.0);
        }
    }

    #[test]
    fn grid_rejects_bad_beta() {
        assert!(build_grid(0.0, 0.3).is_err());
        assert!(build_grid(1.0, 0.3).is_err());
        assert!(build_grid(0.5, 0.0).is_err());
    }

    #[test]
    fn calibration_modes() {
        let h = 1.0f64 / 64.0;
        let beta = 0.75;
        let e = calibrate_k(h, beta, 1, CalibrationMode::Experiment).unwrap();
        let s = calibrate_k(h, beta, 1, CalibrationMode::Strong).unwrap();
        // d·α = 2 on the cube, so strong mode is π²/4 times experiment mode
        assert!((s / e - PI * PI / 4.0).abs() < 1e-12);
        assert!(s >= e);

        // αβ > 1 branch (d=1, β=5/8): K = d(2αβ−1)|ln h|
        let w = calibrate_k(h, 0.625, 1, CalibrationMode::Weak).unwrap();
        let expect = PI * PI / (2.0 * (2.0 * 2.0 * 0.625 - 1.0) * 64.0f64.ln());
        assert!((w - expect).abs() < 1e-12);

        // αβ = 1 branch (d=1, β=1/2): K = d|ln h| + ln|ln h|
        let w = calibrate_k(h, 0.5, 1, CalibrationMode::Weak).unwrap();
        let expect = PI * PI / (2.0 * (64.0f64.ln() + 64.0f64.ln().ln()));
        assert!((w - expect).abs() < 1e-12);

        // αβ < 1 branch (d=2, β=5/8): K = dαβ|ln h|
        let w = calibrate_k(h, 0.625, 2, CalibrationMode::Weak).unwrap();
        let expect = PI * PI / (2.0 * 2.0 * 0.625 * 64.0f64.ln());
        assert!((w - expect).abs() < 1e-12);

        assert!(calibrate_k(1.0, beta, 1, CalibrationMode::Experiment).is_err());
        assert!(calibrate_k(0.5, 1.2, 1, CalibrationMode::Experiment).is_err());
    }

    #[test]
    fn zero_load_and_linearity() {
        let mesh = build_mesh(1, 8).unwrap();
        let fem = assemble(&mesh, 0.5).unwrap();
        let grid = build_grid(0.5, 0.35).unwrap();
        let n = fem.mass.nrows();

        let zero = apply_quadrature(&grid, &fem, &vec![0.0; n]).unwrap();
        assert_eq!(zero, vec![0.0; n]);

        let s = NormalStream::new(3, StreamTag::Test, 0);
        let mut b1 = vec![0.0; n];
        let mut b2 = vec![0.0; n];
        s.fill_normals(&mut b1);
        NormalStream::new(3, StreamTag::Test, 1).fill_normals(&mut b2);
        let sum: Vec<f64> = b1.iter().zip(&b2).map(|(a, b)| a + b).collect();
        let ua = apply_quadrature(&grid, &fem, &b1).unwrap();
        let ub = apply_quadrature(&grid, &fem, &b2).unwrap();
        let us = apply_quadrature(&grid, &fem, &sum).unwrap();
        for i in 0..n {
            assert!((us[i] - ua[i] - ub[i]).abs() < 1e-8, "component {i}");
        }
    }

    #[test]
    fn parallel_and_sequential_agree_exactly() {
        let mesh = build_mesh(2, 6).unwrap();
        let fem = assemble(&mesh, 0.5).unwrap();
        let grid = build_grid(0.75, 0.4).unwrap();
        let n = fem.mass.nrows();
        let mut b = vec![0.0; n];
        NormalStream::new(17, StreamTag::Test, 0).fill_normals(&mut b);
        let par = apply_quadrature(&grid, &fem, &b).unwrap();
        let seq = apply_quadrature_seq(&grid, &fem, &b).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn eigenvector_load_reproduces_scaled_eigenvector() {
        let mesh = build_mesh(1, 8).unwrap();
        let fem = assemble(&mesh, 0.5).unwrap();
        let k = 0.3;
        let grid = build_grid(0.5, k).unwrap();
        let frac = DenseFracInverse::new(&fem).unwrap();
        let v1 = frac.eigenvector(0);
        let lam1 = frac.eigenvalues()[0];
        let b = fem.mass.mul_vec(&v1).unwrap();
        let u = apply_quadrature(&grid, &fem, &b).unwrap();
        let envelope = (-PI * PI / (2.0 * k)).exp();
        for i in 0..u.len() {
            let expect = lam1.powf(-0.5) * v1[i];
            assert!(
                (u[i] - expect).abs() <= 20.0 * envelope * lam1.powf(-0.5),
                "component {i}: {} vs {expect}",
                u[i]
            );
        }
    }

    #[test]
    fn dense_inverse_beta_one_is_plain_solve() {
        let mesh = build_mesh(1, 8).unwrap();
        let fem = assemble(&mesh, 0.5).unwrap();
        let n = fem.mass.nrows();
        let mut b = vec![0.0; n];
        NormalStream::new(5, StreamTag::Test, 0).fill_normals(&mut b);
        let u = dense_frac_inverse(&fem, 1.0, &b).unwrap();
        let direct = cg_solve(&fem.operator_matrix, &b, 1e-13, 1000).unwrap();
        for i in 0..n {
            assert!((u[i] - direct[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn dense_inverse_eigenvector_case_and_symmetry() {
        let mesh = build_mesh(1, 8).unwrap();
        let fem = assemble(&mesh, 0.5).unwrap();
        let frac = DenseFracInverse::new(&fem).unwrap();
        let beta = 0.75;
        let j = 2;
        let vj = frac.eigenvector(j);
        let b = fem.mass.mul_vec(&vj).unwrap();
        let u = frac.apply(beta, &b);
        let lam = frac.eigenvalues()[j];
        for i in 0..u.len() {
            assert!((u[i] - lam.powf(-beta) * vj[i]).abs() < 1e-10);
        }

        // load-space symmetry b₂ᵀ L^{-β}(b₁) = b₁ᵀ L^{-β}(b₂)
        let n = vj.len();
        let mut b1 = vec![0.0; n];
        let mut b2 = vec![0.0; n];
        NormalStream::new(6, StreamTag::Test, 0).fill_normals(&mut b1);
        NormalStream::new(6, StreamTag::Test, 1).fill_normals(&mut b2);
        let u1 = frac.apply(beta, &b1);
        let u2 = frac.apply(beta, &b2);
        let p: f64 = b2.iter().zip(&u1).map(|(a, b)| a * b).sum();
        let q: f64 = b1.iter().zip(&u2).map(|(a, b)| a * b).sum();
        assert!((p - q).abs() <= 1e-10 * p.abs().max(1.0));
    }

    #[test]
    fn quadrature_self_adjoint_and_positive() {
        let mesh = build_mesh(1, 12).unwrap();
        let fem = assemble(&mesh, 0.5).unwrap();
        let grid = build_grid(0.625, 0.4).unwrap();
        let n = fem.mass.nrows();
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        NormalStream::new(9, StreamTag::Test, 0).fill_normals(&mut u);
        NormalStream::new(9, StreamTag::Test, 1).fill_normals(&mut v);
        let qu = apply_quadrature(&grid, &fem, &fem.mass.mul_vec(&u).unwrap()).unwrap();
        let qv = apply_quadrature(&grid, &fem, &fem.mass.mul_vec(&v).unwrap()).unwrap();
        let mu = fem.mass.mul_vec(&qu).unwrap();
        let mv = fem.mass.mul_vec(&qv).unwrap();
        let vmqu: f64 = v.iter().zip(&mu).map(|(a, b)| a * b).sum();
        let umqv: f64 = u.iter().zip(&mv).map(|(a, b)| a * b).sum();
        assert!((vmqu - umqv).abs() <= 1e-9 * vmqu.abs().max(1.0));
        let umqu: f64 = u.iter().zip(&mu).map(|(a, b)| a * b).sum();
        assert!(umqu > 0.0);
    }

    #[test]
    fn half_power_composes_to_inverse() {
        let mesh = build_mesh(1, 16).unwrap();
        let fem = assemble(&mesh, 0.5).unwrap();
        let k = 0.35;
        let grid = build_grid(0.5, k).unwrap();
        let n = fem.mass.nrows();
        let mut b = vec![0.0; n];
        NormalStream::new(12, StreamTag::Test, 0).fill_normals(&mut b);

        let once = apply_quadrature(&grid, &fem, &b).unwrap();
        let twice = apply_quadrature(&grid, &fem, &fem.mass.mul_vec(&once).unwrap()).unwrap();
        let direct = cg_solve(&fem.operator_matrix, &b, 1e-13, 2000).unwrap();

        // ‖(Q² − L⁻¹)φ‖ ≤ ‖Q − L^{-1/2}‖ (‖Q‖ + ‖L^{-1/2}‖) ‖φ‖ with every
        // factor measured, plus a small allowance for the iterative solves
        let disc = quadrature_discrepancy(&fem, 0.5, k).unwrap();
        let m = DenseMatrix::from_sparse(&fem.mass);
        let frac = DenseFracInverse::new(&fem).unwrap();
        let norm_half = m_operator_norm(|c| frac.apply(0.5, &m.mul_vec(c)), &m).unwrap();
        let norm_q = m_operator_norm(
            |c| apply_quadrature(&grid, &fem, &m.mul_vec(c)).unwrap(),
            &m,
        )
        .unwrap();
        let phi = cg_solve(&fem.mass, &b, 1e-13, 2000).unwrap();
        let norm_phi = crate::mesh::l2_error_norm(&fem, &phi).unwrap();

        let err: Vec<f64> = twice.iter().zip(&direct).map(|(a, b)| a - b).collect();
        let err_norm = crate::mesh::l2_error_norm(&fem, &err).unwrap();
        let bound = 1.05 * disc * (norm_q + norm_half) * norm_phi + 1e-8 * norm_phi;
        assert!(err_norm <= bound, "{err_norm} vs bound {bound}");
    }

    #[test]
    fn discrepancy_decays_and_stays_bounded() {
        let mesh = build_mesh(1, 16).unwrap();
        let fem = assemble(&mesh, 0.5).unwrap();
        let d_coarse = quadrature_discrepancy(&fem, 0.5, 0.5).unwrap();
        let d_fine = quadrature_discrepancy(&fem, 0.5, 0.3).unwrap();
        // e^{-π²/(2k)} drops by e^{-π²(1/0.6-1/1)} ≈ e^{-6.58}
        assert!(d_fine < d_coarse * 0.05, "{d_fine} vs {d_coarse}");

        // very coarse step: triangle-inequality sanity bound
        let m = DenseMatrix::from_sparse(&fem.mass);
        let grid = build_grid(0.5, 2.0).unwrap();
        let frac = DenseFracInverse::new(&fem).unwrap();
        let norm_frac = m_operator_norm(|c| frac.apply(0.5, &m.mul_vec(c)), &m).unwrap();
        let norm_q = m_operator_norm(
            |c| apply_quadrature(&grid, &fem, &m.mul_vec(c)).unwrap(),
            &m,
        )
        .unwrap();
        let disc = quadrature_discrepancy(&fem, 0.5, 2.0).unwrap();
        assert!(disc <= norm_q + norm_frac + 1e-9);
    }
}
