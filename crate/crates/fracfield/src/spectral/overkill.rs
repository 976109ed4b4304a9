//! Overkill spectral reference: truncated Karhunen-Loève white noise on
//! the cube eigenbasis, its exact fractional solve, and the exact
//! projection of the noise onto the FEM load vector.
//!
//! All grid evaluations run as separable axis-by-axis contractions, so
//! the cost is O(d · N_ok^d · (n−1)) rather than O(N_ok^d · N_h).

use crate::error::{Error, Result};
use crate::exec::{map_range, map_range_seq};
use crate::mesh::Mesh;
use crate::rng::{NormalStream, StreamTag};

const PI: f64 = std::f64::consts::PI;
const SQRT2: f64 = std::f64::consts::SQRT_2;

/// One realization of the truncated white noise Σ_θ ξ_θ e_θ with
/// θ ∈ {1..N_ok}^d, stored row-major with the last axis fastest.
#[derive(Debug, Clone)]
pub struct OverkillNoise {
    pub dim: usize,
    pub n_ok: usize,
    pub kappa: f64,
    pub seed: u64,
    pub sample_index: u64,
    pub xi: Vec<f64>,
}

/// Draws the ξ array deterministically from (seed, sample_index).
pub fn sample_overkill(
    dim: usize,
    n_ok: usize,
    kappa: f64,
    seed: u64,
    sample_index: u64,
) -> Result<OverkillNoise> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidParameter(format!("dimension {dim}")));
    }
    if n_ok == 0 {
        return Err(Error::InvalidParameter("N_ok must be at least 1".into()));
    }
    let len = n_ok.pow(dim as u32);
    let mut xi = vec![0.0; len];
    NormalStream::new(seed, StreamTag::OverkillXi, sample_index).fill_normals(&mut xi);
    Ok(OverkillNoise {
        dim,
        n_ok,
        kappa,
        seed,
        sample_index,
        xi,
    })
}

/// Precomputed per-axis contraction kernels for one (mesh, N_ok) pair.
///
/// `eig`: √2 sin(πθx_i) sampled at the interior nodes; `sine_hat`: the
/// exact integral ∫ √2 sin(πθx) φ_i(x) dx. Both are (N_ok × m) with the
/// mode index slow, reused across samples and β values.
pub struct OverkillProjector {
    mesh: Mesh,
    n_ok: usize,
    eig: Vec<f64>,
    sine_hat: Vec<f64>,
}

impl OverkillProjector {
    pub fn new(mesh: &Mesh, n_ok: usize) -> Self {
        let m = mesh.nodes_per_axis();
        let w = mesh.spacing();
        let mut eig = vec![0.0; n_ok * m];
        let mut sine_hat = vec![0.0; n_ok * m];
        for t in 1..=n_ok {
            let tf = t as f64;
            // ∫ sin(tπx) φ_i dx = sin(tπ x_i) (2 − 2cos(tπw)) / (t²π²w)
            let hat_factor = (2.0 - 2.0 * (tf * PI * w).cos()) / (tf * tf * PI * PI * w);
            for i in 1..=m {
                let s = SQRT2 * (tf * PI * i as f64 * w).sin();
                eig[(t - 1) * m + (i - 1)] = s;
                sine_hat[(t - 1) * m + (i - 1)] = s * hat_factor;
            }
        }
        OverkillProjector {
            mesh: *mesh,
            n_ok,
            eig,
            sine_hat,
        }
    }

    fn check(&self, noise: &OverkillNoise) -> Result<()> {
        if noise.dim != self.mesh.dim() {
            return Err(Error::DimensionMismatch(
                "noise and mesh dimensions differ".into(),
            ));
        }
        if noise.n_ok != self.n_ok {
            return Err(Error::DimensionMismatch(
                "noise truncation differs from the projector's".into(),
            ));
        }
        Ok(())
    }

    /// Nodal values of u_ok = Σ_θ λ_θ^{−β} ξ_θ e_θ at the interior nodes.
    pub fn eval_solution(&self, noise: &OverkillNoise, beta: f64) -> Result<Vec<f64>> {
        self.check(noise)?;
        let weighted = self.weighted_modes(noise, beta);
        Ok(contract_all(
            &weighted,
            noise.dim,
            self.n_ok,
            self.mesh.nodes_per_axis(),
            &self.eig,
            false,
        ))
    }

    pub fn eval_solution_seq(&self, noise: &OverkillNoise, beta: f64) -> Result<Vec<f64>> {
        self.check(noise)?;
        let weighted = self.weighted_modes(noise, beta);
        Ok(contract_all(
            &weighted,
            noise.dim,
            self.n_ok,
            self.mesh.nodes_per_axis(),
            &self.eig,
            true,
        ))
    }

    /// Load vector b̃_i = ⟨𝒲_ok, φ_i⟩ via the exact sine-hat integrals.
    pub fn project_load(&self, noise: &OverkillNoise) -> Result<Vec<f64>> {
        self.check(noise)?;
        Ok(contract_all(
            &noise.xi,
            noise.dim,
            self.n_ok,
            self.mesh.nodes_per_axis(),
            &self.sine_hat,
            false,
        ))
    }

    pub fn project_load_seq(&self, noise: &OverkillNoise) -> Result<Vec<f64>> {
        self.check(noise)?;
        Ok(contract_all(
            &noise.xi,
            noise.dim,
            self.n_ok,
            self.mesh.nodes_per_axis(),
            &self.sine_hat,
            true,
        ))
    }

    /// λ_θ^{−β} ξ_θ; in d = 3 the powers are tabulated over the integer
    /// values of |θ|², which are few compared to the modes.
    fn weighted_modes(&self, noise: &OverkillNoise, beta: f64) -> Vec<f64> {
        let k2 = noise.kappa * noise.kappa;
        let k = self.n_ok;
        let d = noise.dim;
        let mut out = vec![0.0; noise.xi.len()];
        if d < 3 {
            let mut idx = 0;
            let mut mi = vec![1usize; d];
            loop {
                let nsq: usize = mi.iter().map(|&t| t * t).sum();
                out[idx] = noise.xi[idx] * (k2 + PI * PI * nsq as f64).powf(-beta);
                idx += 1;
                // odometer over {1..K}^d, last axis fastest
                let mut axis = d;
                loop {
                    if axis == 0 {
                        return out;
                    }
                    axis -= 1;
                    if mi[axis] < k {
                        mi[axis] += 1;
                        break;
                    }
                    mi[axis] = 1;
                }
            }
        }
        let mut table = vec![0.0; 3 * k * k + 1];
        for (nsq, slot) in table.iter_mut().enumerate().skip(3) {
            *slot = (k2 + PI * PI * nsq as f64).powf(-beta);
        }
        let mut idx = 0;
        for t1 in 1..=k {
            for t2 in 1..=k {
                let base = t1 * t1 + t2 * t2;
                for t3 in 1..=k {
                    out[idx] = noise.xi[idx] * table[base + t3 * t3];
                    idx += 1;
                }
            }
        }
        out
    }
}

/// Contracts the mode tensor against the (N_ok × m) axis kernel once per
/// axis. Each stage eliminates the slowest remaining mode axis and
/// appends the corresponding node axis, so after d stages the output is
/// in lexicographic node order.
fn contract_all(
    tensor: &[f64],
    dim: usize,
    n_ok: usize,
    m: usize,
    kernel: &[f64],
    sequential: bool,
) -> Vec<f64> {
    let mut current = tensor.to_vec();
    for stage in 0..dim {
        let rest = n_ok.pow((dim - 1 - stage) as u32) * m.pow(stage as u32);
        current = contract_slowest(&current, n_ok, rest, kernel, m, sequential);
    }
    current
}

// out[(r, i)] = Σ_θ t[(θ, r)] · kernel[(θ, i)]
fn contract_slowest(
    t: &[f64],
    n_ok: usize,
    rest: usize,
    kernel: &[f64],
    m: usize,
    sequential: bool,
) -> Vec<f64> {
    debug_assert_eq!(t.len(), n_ok * rest);
    let run = |r: usize| -> Vec<f64> {
        let mut row = vec![0.0; m];
        for theta in 0..n_ok {
            let tv = t[theta * rest + r];
            if tv == 0.0 {
                continue;
            }
            let krow = &kernel[theta * m..(theta + 1) * m];
            for (o, &kv) in row.iter_mut().zip(krow) {
                *o += tv * kv;
            }
        }
        row
    };
    let rows = if sequential {
        map_range_seq(rest, run)
    } else {
        map_range(rest, run)
    };
    let mut out = Vec::with_capacity(rest * m);
    for row in rows {
        out.extend_from_slice(&row);
    }
    out
}

/// One-shot form of [`OverkillProjector::eval_solution`].
pub fn eval_overkill_solution(noise: &OverkillNoise, beta: f64, mesh: &Mesh) -> Result<Vec<f64>> {
    OverkillProjector::new(mesh, noise.n_ok).eval_solution(noise, beta)
}

pub fn eval_overkill_solution_seq(
    noise: &OverkillNoise,
    beta: f64,
    mesh: &Mesh,
) -> Result<Vec<f64>> {
    OverkillProjector::new(mesh, noise.n_ok).eval_solution_seq(noise, beta)
}

/// One-shot form of [`OverkillProjector::project_load`].
pub fn project_overkill_load(noise: &OverkillNoise, mesh: &Mesh) -> Result<Vec<f64>> {
    OverkillProjector::new(mesh, noise.n_ok).project_load(noise)
}

pub fn project_overkill_load_seq(noise: &OverkillNoise, mesh: &Mesh) -> Result<Vec<f64>> {
    OverkillProjector::new(mesh, noise.n_ok).project_load_seq(noise)
}
