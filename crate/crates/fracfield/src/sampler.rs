//! White-noise load sampling and solution samples.
//!
//! A load vector with entries ⟨𝒲_h, φ_i⟩ is N(0, M)-distributed, so
//! samples are b = g + G z with z iid standard normal and G·Gᵀ = M.
//! Two factorizations are offered: a global sparse Cholesky of M, and a
//! per-element factorization of the 2^d × 2^d cell mass matrix whose
//! scattered sum reproduces M exactly without any global factor. The
//! per-element route avoids Cholesky fill in d = 3.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::fractional::{apply_quadrature, QuadratureGrid};
use crate::mesh::{FemMatrices, Mesh};
use crate::rng::{NormalStream, StreamTag};
use crate::sparse::{cholesky_sparse, DenseMatrix, SparseMatrix};
use crate::spectral::OverkillNoise;

/// Which factorization of M backs the noise samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorStrategy {
    GlobalCholesky,
    PerElement,
}

impl FactorStrategy {
    /// Global Cholesky for d ≤ 2, per-element for d = 3.
    pub fn default_for_dim(dim: usize) -> Self {
        if dim <= 2 {
            FactorStrategy::GlobalCholesky
        } else {
            FactorStrategy::PerElement
        }
    }
}

enum FactorKind {
    Global { factor: SparseMatrix },
    PerElement { factor: DenseMatrix },
}

/// Factorization of the mass matrix used to draw N(0, M) loads.
pub struct NoiseFactor {
    mesh: Mesh,
    kind: FactorKind,
}

impl NoiseFactor {
    pub fn strategy(&self) -> FactorStrategy {
        match self.kind {
            FactorKind::Global { .. } => FactorStrategy::GlobalCholesky,
            FactorKind::PerElement { .. } => FactorStrategy::PerElement,
        }
    }

    /// The global lower factor, when that strategy is active.
    pub fn global_factor(&self) -> Option<&SparseMatrix> {
        match &self.kind {
            FactorKind::Global { factor } => Some(factor),
            FactorKind::PerElement { .. } => None,
        }
    }

    /// The 2^d × 2^d element factor, when per-element is active.
    pub fn element_factor(&self) -> Option<&DenseMatrix> {
        match &self.kind {
            FactorKind::Global { .. } => None,
            FactorKind::PerElement { factor } => Some(factor),
        }
    }
}

/// Dense element mass matrix of one Q1 cell, ⊗_d (w/6)[[2,1],[1,2]].
fn element_mass(dim: usize, w: f64) -> DenseMatrix {
    let corners = 1usize << dim;
    let mut m = DenseMatrix::zeros(corners, corners);
    for a in 0..corners {
        for b in 0..corners {
            let mut v = 1.0;
            for axis in 0..dim {
                let same = ((a >> axis) & 1) == ((b >> axis) & 1);
                v *= if same { 2.0 * w / 6.0 } else { w / 6.0 };
            }
            m.set(a, b, v);
        }
    }
    m
}

/// Builds the factorization for the given strategy.
pub fn build_noise_factor(
    mesh: &Mesh,
    fem: &FemMatrices,
    strategy: FactorStrategy,
) -> Result<NoiseFactor> {
    let kind = match strategy {
        FactorStrategy::GlobalCholesky => FactorKind::Global {
            factor: cholesky_sparse(&fem.mass)?,
        },
        FactorStrategy::PerElement => FactorKind::PerElement {
            factor: element_mass(mesh.dim(), mesh.spacing()).cholesky_lower()?,
        },
    };
    Ok(NoiseFactor { mesh: *mesh, kind })
}

fn add_g_load(mut b: Vec<f64>, g_load: Option<&[f64]>) -> Result<Vec<f64>> {
    if let Some(g) = g_load {
        if g.len() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "deterministic load length {} against {} nodes",
                g.len(),
                b.len()
            )));
        }
        for (bi, gi) in b.iter_mut().zip(g) {
            *bi += gi;
        }
    }
    Ok(b)
}

/// Draws b = g + G z with z from the (seed, load, sample_index) stream.
pub fn sample_load(
    factor: &NoiseFactor,
    g_load: Option<&[f64]>,
    seed: u64,
    sample_index: u64,
) -> Result<Vec<f64>> {
    let n = factor.mesh.interior_nodes();
    let stream = NormalStream::new(seed, StreamTag::LoadZ, sample_index);
    let b = match &factor.kind {
        FactorKind::Global { factor } => {
            let mut z = vec![0.0; n];
            stream.fill_normals(&mut z);
            factor.mul_vec(&z)?
        }
        FactorKind::PerElement { factor: ge } => {
            let mesh = &factor.mesh;
            let d = mesh.dim();
            let nsub = mesh.n();
            let m = mesh.nodes_per_axis();
            let corners = 1usize << d;
            let cells = nsub.pow(d as u32);
            let mut b = vec![0.0; n];
            let mut z = vec![0.0; corners];
            let mut y = vec![0.0; corners];
            for cell in 0..cells {
                let mut c = [0usize; 3];
                let mut rest = cell;
                for axis in (0..d).rev() {
                    c[axis] = rest % nsub;
                    rest /= nsub;
                }
                for (q, slot) in z.iter_mut().enumerate() {
                    *slot = stream.normal((cell * corners + q) as u64);
                }
                for (i, slot) in y.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for j in 0..=i {
                        acc += ge.get(i, j) * z[j];
                    }
                    *slot = acc;
                }
                'corner: for (q, &val) in y.iter().enumerate() {
                    let mut idx = 0usize;
                    for axis in 0..d {
                        let node = c[axis] + ((q >> axis) & 1);
                        if node == 0 || node == nsub {
                            continue 'corner;
                        }
                        idx = idx * m + (node - 1);
                    }
                    b[idx] += val;
                }
            }
            b
        }
    };
    add_g_load(b, g_load)
}

/// The z → 0 test hook: only the deterministic part of the load.
pub fn sample_load_deterministic(factor: &NoiseFactor, g_load: Option<&[f64]>) -> Result<Vec<f64>> {
    add_g_load(vec![0.0; factor.mesh.interior_nodes()], g_load)
}

/// One realization of the approximate solution field, together with
/// everything needed to regenerate it bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub mesh: Mesh,
    pub beta: f64,
    pub kappa: f64,
    pub k: f64,
    pub k_minus: usize,
    pub k_plus: usize,
    pub seed: u64,
    pub sample_index: u64,
    /// Nodal coefficients in lexicographic interior-node order.
    pub coefficients: Vec<f64>,
}

const SAMPLE_FORMAT_VERSION: u32 = 1;

impl FieldSample {
    /// Text serialization: `key = value` header, blank line, then one
    /// coefficient per line in lexicographic node order.
    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "format_version = {SAMPLE_FORMAT_VERSION}")?;
        writeln!(out, "dim = {}", self.mesh.dim())?;
        writeln!(out, "n = {}", self.mesh.n())?;
        writeln!(out, "beta = {}", self.beta)?;
        writeln!(out, "kappa = {}", self.kappa)?;
        writeln!(out, "k = {}", self.k)?;
        writeln!(out, "k_minus = {}", self.k_minus)?;
        writeln!(out, "k_plus = {}", self.k_plus)?;
        writeln!(out, "seed = {}", self.seed)?;
        writeln!(out, "sample_index = {}", self.sample_index)?;
        writeln!(out)?;
        for c in &self.coefficients {
            writeln!(out, "{c}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<FieldSample> {
        let mut header = std::collections::BTreeMap::new();
        let mut coefficients = Vec::new();
        let mut in_header = true;
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if in_header {
                if line.is_empty() {
                    in_header = false;
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| Error::MalformedSample(format!("header line '{line}'")))?;
                header.insert(key.trim().to_string(), value.trim().to_string());
            } else if !line.is_empty() {
                coefficients.push(
                    line.parse::<f64>()
                        .map_err(|e| Error::MalformedSample(format!("coefficient '{line}': {e}")))?,
                );
            }
        }
        fn get<T: std::str::FromStr>(
            header: &std::collections::BTreeMap<String, String>,
            key: &str,
        ) -> Result<T> {
            header
                .get(key)
                .ok_or_else(|| Error::MalformedSample(format!("missing key '{key}'")))?
                .parse::<T>()
                .map_err(|_| Error::MalformedSample(format!("unparseable value for '{key}'")))
        }
        let version: u32 = get(&header, "format_version")?;
        if version != SAMPLE_FORMAT_VERSION {
            return Err(Error::MalformedSample(format!(
                "unsupported format version {version}"
            )));
        }
        let mesh = crate::mesh::build_mesh(get(&header, "dim")?, get(&header, "n")?)?;
        if coefficients.len() != mesh.interior_nodes() {
            return Err(Error::MalformedSample(format!(
                "{} coefficients for {} interior nodes",
                coefficients.len(),
                mesh.interior_nodes()
            )));
        }
        Ok(FieldSample {
            mesh,
            beta: get(&header, "beta")?,
            kappa: get(&header, "kappa")?,
            k: get(&header, "k")?,
            k_minus: get(&header, "k_minus")?,
            k_plus: get(&header, "k_plus")?,
            seed: get(&header, "seed")?,
            sample_index: get(&header, "sample_index")?,
            coefficients,
        })
    }
}

fn make_sample(
    mesh: &Mesh,
    fem: &FemMatrices,
    grid: &QuadratureGrid,
    seed: u64,
    sample_index: u64,
    coefficients: Vec<f64>,
) -> FieldSample {
    FieldSample {
        mesh: *mesh,
        beta: grid.beta,
        kappa: fem.kappa,
        k: grid.k,
        k_minus: grid.k_minus,
        k_plus: grid.k_plus,
        seed,
        sample_index,
        coefficients,
    }
}

/// Draws a load sample and solves for u^Q: one realization of the field.
pub fn sample_solution(
    mesh: &Mesh,
    fem: &FemMatrices,
    grid: &QuadratureGrid,
    factor: &NoiseFactor,
    g_load: Option<&[f64]>,
    seed: u64,
    sample_index: u64,
) -> Result<FieldSample> {
    if factor.mesh != *mesh {
        return Err(Error::DimensionMismatch(
            "noise factor built for a different mesh".into(),
        ));
    }
    let b = sample_load(factor, g_load, seed, sample_index)?;
    let coefficients = apply_quadrature(grid, fem, &b)?;
    Ok(make_sample(mesh, fem, grid, seed, sample_index, coefficients))
}

/// Deterministic-load variant of [`sample_solution`] (the z → 0 hook).
pub fn solve_deterministic(
    mesh: &Mesh,
    fem: &FemMatrices,
    grid: &QuadratureGrid,
    g_load: &[f64],
) -> Result<FieldSample> {
    let coefficients = apply_quadrature(grid, fem, g_load)?;
    Ok(make_sample(mesh, fem, grid, 0, 0, coefficients))
}

/// Solution driven by a shared overkill noise realization: the load is
/// the exact projection ⟨𝒲_ok, φ_i⟩, so the result is coupled to the
/// overkill reference evaluated from the same noise.
pub fn shared_noise_solution(
    mesh: &Mesh,
    fem: &FemMatrices,
    grid: &QuadratureGrid,
    noise: &OverkillNoise,
) -> Result<FieldSample> {
    let b = crate::spectral::project_overkill_load(noise, mesh)?;
    let coefficients = apply_quadrature(grid, fem, &b)?;
    Ok(make_sample(
        mesh,
        fem,
        grid,
        noise.seed,
        noise.sample_index,
        coefficients,
    ))
}
