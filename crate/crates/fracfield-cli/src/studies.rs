//! The convergence studies and the rate regression.

use std::time::Instant;

use thiserror::Error;

use fracfield::fractional::{
    apply_quadrature, build_grid, quadrature_discrepancy, Calibration, QuadratureGrid,
};
use fracfield::mesh::{assemble, build_mesh, l2_error_norm, FemMatrices, Mesh};
use fracfield::sampler::{build_noise_factor, sample_load, FactorStrategy};
use fracfield::sparse::DenseMatrix;
use fracfield::spectral::{analytic_solution_sqnorm, sample_overkill, OverkillProjector};

use crate::config::{ExperimentConfig, StudyKind};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error(transparent)]
    Numeric(#[from] fracfield::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// One mesh row of a study.
#[derive(Debug, Clone)]
pub struct ErrorRecord {
    pub h: f64,
    pub n_h: usize,
    pub k: f64,
    pub node_count: usize,
    pub error: f64,
    pub study: StudyKind,
    pub wall_ms: u128,
}

/// Least-squares fit of ln err = intercept + rate · ln h.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    /// RMS residual of the fit in log space.
    pub residual: f64,
}

/// Residual threshold above which a fit is reported as high-variance.
pub const HIGH_VARIANCE_RESIDUAL: f64 = 0.25;

impl RateFit {
    pub fn is_high_variance(&self) -> bool {
        self.residual > HIGH_VARIANCE_RESIDUAL
    }
}

/// Fits ln err against ln h by least squares.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    fit_log_linear(points.iter().map(|&(h, e)| (h.ln(), e)), points.len())
}

fn fit_log_linear<I: Iterator<Item = (f64, f64)>>(points: I, count: usize) -> Result<RateFit> {
    if count < 2 {
        return Err(HarnessError::DegenerateData(
            "need at least two points for a rate fit".into(),
        ));
    }
    let mut xs = Vec::with_capacity(count);
    let mut ys = Vec::with_capacity(count);
    for (x, err) in points {
        if err <= 0.0 || err.is_nan() {
            return Err(HarnessError::DegenerateData(format!(
                "nonpositive error value {err}"
            )));
        }
        xs.push(x);
        ys.push(err.ln());
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::DegenerateData("abscissae coincide".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let rate = sxy / sxx;
    let intercept = mean_y - rate * mean_x;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - rate * x;
            r * r
        })
        .sum();
    Ok(RateFit {
        rate,
        intercept,
        residual: (rss / n).sqrt(),
    })
}

#[cfg(feature = "parallel")]
fn par_map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

fn mesh_setup(cfg: &ExperimentConfig, n: usize) -> Result<(Mesh, FemMatrices, f64, QuadratureGrid)> {
    let mesh = build_mesh(cfg.dim, n)?;
    let fem = assemble(&mesh, cfg.kappa)?;
    let h = mesh.diameter();
    let k = Calibration::on_cube(cfg.calibration, cfg.beta, cfg.dim).k(h)?;
    let grid = build_grid(cfg.beta, k)?;
    Ok((mesh, fem, h, grid))
}

/// Upper bound on the spectral tail Σ_{θ outside the overkill box} λ_θ^{−2β},
/// from the orthant integral of the radial envelope.
fn overkill_tail_bound(dim: usize, beta: f64, n_ok: usize) -> f64 {
    let c_d = match dim {
        1 => 1.0,
        _ => PI / 2.0,
    };
    let p = 4.0 * beta - dim as f64;
    let rho = n_ok as f64 - (dim as f64).sqrt();
    c_d * PI.powf(-4.0 * beta) * rho.powf(-p) / p
}

/// Output of a strong study: per-mesh averaged pathwise errors, the
/// fitted rate, and the documented overkill-truncation diagnostic
/// (tail bound over the smallest observed squared error).
pub struct StrongOutput {
    pub records: Vec<ErrorRecord>,
    pub fit: Result<RateFit>,
    pub tail_ratio: f64,
}

/// Strong error study with shared overkill noise: per sample i the same
/// 𝒲_ok realization drives both the overkill solution (evaluated at the
/// mesh nodes) and the quadrature solution via the projected load; the
/// per-mesh error is the average of the pathwise L₂ distances.
pub fn strong_study(cfg: &ExperimentConfig) -> Result<StrongOutput> {
    cfg.validate().map_err(HarnessError::Config)?;
    if cfg.study != StudyKind::Strong {
        return Err(HarnessError::Config("config is not a strong study".into()));
    }

    let mut records = Vec::with_capacity(cfg.mesh_ns.len());
    for &n in &cfg.mesh_ns {
        let started = Instant::now();
        let (mesh, fem, h, grid) = mesh_setup(cfg, n)?;
        let projector = OverkillProjector::new(&mesh, cfg.n_ok);

        let sample_errors: Vec<Result<f64>> = par_map(cfg.n_samples, |i| {
            let mut noise = sample_overkill(cfg.dim, cfg.n_ok, cfg.kappa, cfg.seed, i as u64)?;
            if cfg.zero_noise {
                noise.xi.iter_mut().for_each(|x| *x = 0.0);
            }
            let u_ok = projector.eval_solution(&noise, cfg.beta)?;
            let b = projector.project_load(&noise)?;
            let u = apply_quadrature(&grid, &fem, &b)?;
            let v: Vec<f64> = u_ok.iter().zip(&u).map(|(a, b)| a - b).collect();
            Ok(l2_error_norm(&fem, &v)?)
        });
        let mut acc = 0.0;
        for e in sample_errors {
            acc += e?;
        }
        let error = acc / cfg.n_samples as f64;
        records.push(ErrorRecord {
            h,
            n_h: mesh.interior_nodes(),
            k: grid.k,
            node_count: grid.node_count(),
            error,
            study: StudyKind::Strong,
            wall_ms: started.elapsed().as_millis(),
        });
    }

    let min_sq = records
        .iter()
        .map(|r| r.error * r.error)
        .fold(f64::INFINITY, f64::min);
    let tail_ratio = overkill_tail_bound(cfg.dim, cfg.beta, cfg.n_ok) / min_sq;

    let points: Vec<(f64, f64)> = records.iter().map(|r| (r.h, r.error)).collect();
    let fit = fit_rate(&points);
    Ok(StrongOutput {
        records,
        fit,
        tail_ratio,
    })
}

/// Output of a weak study: the analytic reference, the per-mesh Monte
/// Carlo estimates of E‖u‖² with their standard errors, and the rate fit
/// of |reference − estimate| against h.
pub struct WeakOutput {
    pub records: Vec<ErrorRecord>,
    pub fit: Result<RateFit>,
    pub reference: f64,
    pub estimates: Vec<f64>,
    pub stderrs: Vec<f64>,
}

/// Reference tolerance: tight where the lattice sum is cheap, relaxed in
/// d = 3 where the enumeration radius would otherwise explode.
fn weak_reference_tol(dim: usize) -> f64 {
    if dim <= 2 {
        1e-6
    } else {
        1e-4
    }
}

/// Weak-type error study: |E‖u‖² − E‖u_{h,k}‖²| with the first term from
/// the analytic eigenvalue series and the second by Monte Carlo over
/// independent N(0, M) loads.
pub fn weak_study(cfg: &ExperimentConfig) -> Result<WeakOutput> {
    cfg.validate().map_err(HarnessError::Config)?;
    if cfg.study != StudyKind::Weak {
        return Err(HarnessError::Config("config is not a weak study".into()));
    }
    let reference =
        analytic_solution_sqnorm(cfg.dim, cfg.kappa, cfg.beta, weak_reference_tol(cfg.dim))?;

    let mut records = Vec::with_capacity(cfg.mesh_ns.len());
    let mut estimates = Vec::new();
    let mut stderrs = Vec::new();
    for &n in &cfg.mesh_ns {
        let started = Instant::now();
        let (mesh, fem, h, grid) = mesh_setup(cfg, n)?;
        let factor = build_noise_factor(&mesh, &fem, FactorStrategy::default_for_dim(cfg.dim))?;

        let values: Vec<Result<f64>> = par_map(cfg.n_mc, |i| {
            let b = sample_load(&factor, None, cfg.seed, i as u64)?;
            let u = apply_quadrature(&grid, &fem, &b)?;
            let norm = l2_error_norm(&fem, &u)?;
            Ok(norm * norm)
        });
        let mut vals = Vec::with_capacity(cfg.n_mc);
        for v in values {
            vals.push(v?);
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = if vals.len() > 1 {
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (vals.len() as f64 - 1.0)
        } else {
            f64::NAN
        };
        let stderr = (var / vals.len() as f64).sqrt();
        estimates.push(mean);
        stderrs.push(stderr);
        records.push(ErrorRecord {
            h,
            n_h: mesh.interior_nodes(),
            k: grid.k,
            node_count: grid.node_count(),
            error: (reference - mean).abs(),
            study: StudyKind::Weak,
            wall_ms: started.elapsed().as_millis(),
        });
    }

    let points: Vec<(f64, f64)> = records.iter().map(|r| (r.h, r.error)).collect();
    let fit = fit_rate(&points);
    Ok(WeakOutput {
        records,
        fit,
        reference,
        estimates,
        stderrs,
    })
}

/// One row of a quad-check sweep.
#[derive(Debug, Clone)]
pub struct QuadCheckRecord {
    pub k: f64,
    pub node_count: usize,
    pub discrepancy: f64,
    pub wall_ms: u128,
}

pub struct QuadCheckOutput {
    pub records: Vec<QuadCheckRecord>,
    /// Fit of ln discrepancy = intercept + slope · (1/k); the sinc rate
    /// predicts slope −π²/2.
    pub slope: f64,
    pub intercept: f64,
}

/// Measures ‖Q^β_{h,k} − L_h^{−β}‖ over a sweep of step sizes and fits
/// the exponential decay in 1/k.
pub fn quad_check_study(cfg: &ExperimentConfig) -> Result<QuadCheckOutput> {
    cfg.validate().map_err(HarnessError::Config)?;
    let n = cfg.single_n.expect("validated");
    let mesh = build_mesh(cfg.dim, n)?;
    let fem = assemble(&mesh, cfg.kappa)?;

    let mut records = Vec::with_capacity(cfg.ks.len());
    for &k in &cfg.ks {
        let started = Instant::now();
        let disc = quadrature_discrepancy(&fem, cfg.beta, k)?;
        records.push(QuadCheckRecord {
            k,
            node_count: build_grid(cfg.beta, k)?.node_count(),
            discrepancy: disc,
            wall_ms: started.elapsed().as_millis(),
        });
    }
    let fit = fit_log_linear(
        records.iter().map(|r| (1.0 / r.k, r.discrepancy)),
        records.len(),
    )?;
    Ok(QuadCheckOutput {
        records,
        slope: fit.rate,
        intercept: fit.intercept,
    })
}

/// One strategy row of a cov-check run.
#[derive(Debug, Clone)]
pub struct CovCheckRecord {
    pub strategy: FactorStrategy,
    pub n_h: usize,
    pub samples: usize,
    /// max |G·Gᵀ − M| (or per-element assembly identity) over max |M|.
    pub factor_rel_err: f64,
    /// worst entrywise deviation of the sample covariance, in units of
    /// the entry's standard error.
    pub max_se_units: f64,
    pub wall_ms: u128,
}

pub struct CovCheckOutput {
    pub records: Vec<CovCheckRecord>,
    /// worst cross-strategy covariance difference in two-sample SE units.
    pub cross_strategy_max_se: f64,
}

/// Checks the exact factorization identity behind the noise sampling and
/// the empirical covariance of the load draws, for both strategies.
#[allow(clippy::needless_range_loop)]
pub fn cov_check_study(cfg: &ExperimentConfig) -> Result<CovCheckOutput> {
    cfg.validate().map_err(HarnessError::Config)?;
    let n = cfg.single_n.expect("validated");
    let mesh = build_mesh(cfg.dim, n)?;
    let fem = assemble(&mesh, cfg.kappa)?;
    let n_h = mesh.interior_nodes();
    let m_dense = DenseMatrix::from_sparse(&fem.mass);
    let m_scale = m_dense.max_abs();

    let mut covariances = Vec::new();
    let mut records = Vec::new();
    for (slot, strategy) in [FactorStrategy::GlobalCholesky, FactorStrategy::PerElement]
        .into_iter()
        .enumerate()
    {
        let started = Instant::now();
        let factor = build_noise_factor(&mesh, &fem, strategy)?;

        // exact identity: reassemble G·Gᵀ from whichever factor is active
        let reassembled = match factor.global_factor() {
            Some(g) => {
                let gd = DenseMatrix::from_sparse(g);
                let mut acc = DenseMatrix::zeros(n_h, n_h);
                for i in 0..n_h {
                    for j in 0..n_h {
                        let mut s = 0.0;
                        for kk in 0..=i.min(j) {
                            s += gd.get(i, kk) * gd.get(j, kk);
                        }
                        acc.set(i, j, s);
                    }
                }
                acc
            }
            None => {
                let ge = factor.element_factor().expect("per-element");
                let d = mesh.dim();
                let nsub = mesh.n();
                let m = mesh.nodes_per_axis();
                let corners = 1usize << d;
                let mut acc = DenseMatrix::zeros(n_h, n_h);
                for cell in 0..nsub.pow(d as u32) {
                    let mut c = [0usize; 3];
                    let mut rest = cell;
                    for axis in (0..d).rev() {
                        c[axis] = rest % nsub;
                        rest /= nsub;
                    }
                    let index_of = |q: usize| -> Option<usize> {
                        let mut idx = 0usize;
                        for axis in 0..d {
                            let node = c[axis] + ((q >> axis) & 1);
                            if node == 0 || node == nsub {
                                return None;
                            }
                            idx = idx * m + (node - 1);
                        }
                        Some(idx)
                    };
                    for a in 0..corners {
                        for b in 0..corners {
                            let mut gg = 0.0;
                            for kk in 0..corners {
                                gg += ge.get(a, kk) * ge.get(b, kk);
                            }
                            if let (Some(ia), Some(ib)) = (index_of(a), index_of(b)) {
                                acc.set(ia, ib, acc.get(ia, ib) + gg);
                            }
                        }
                    }
                }
                acc
            }
        };
        let mut factor_rel_err = 0.0f64;
        for i in 0..n_h {
            for j in 0..n_h {
                factor_rel_err =
                    factor_rel_err.max((reassembled.get(i, j) - m_dense.get(i, j)).abs());
            }
        }
        factor_rel_err /= m_scale;

        // empirical covariance over cfg.cov_samples draws
        let rows: Vec<Result<Vec<f64>>> = par_map(cfg.cov_samples, |i| {
            let b = sample_load(&factor, None, cfg.seed + slot as u64, i as u64)?;
            let mut outer = vec![0.0; n_h * n_h];
            for p in 0..n_h {
                for q in 0..n_h {
                    outer[p * n_h + q] = b[p] * b[q];
                }
            }
            Ok(outer)
        });
        let mut cov = vec![0.0; n_h * n_h];
        for r in rows {
            for (c, v) in cov.iter_mut().zip(r?) {
                *c += v;
            }
        }
        for c in cov.iter_mut() {
            *c /= cfg.cov_samples as f64;
        }
        let mut max_se_units = 0.0f64;
        for p in 0..n_h {
            for q in 0..n_h {
                let mpq = m_dense.get(p, q);
                let se = ((m_dense.get(p, p) * m_dense.get(q, q) + mpq * mpq)
                    / cfg.cov_samples as f64)
                    .sqrt();
                max_se_units = max_se_units.max((cov[p * n_h + q] - mpq).abs() / se);
            }
        }
        covariances.push(cov);
        records.push(CovCheckRecord {
            strategy,
            n_h,
            samples: cfg.cov_samples,
            factor_rel_err,
            max_se_units,
            wall_ms: started.elapsed().as_millis(),
        });
    }

    let mut cross = 0.0f64;
    for p in 0..n_h {
        for q in 0..n_h {
            let mpq = m_dense.get(p, q);
            let se = ((m_dense.get(p, p) * m_dense.get(q, q) + mpq * mpq)
                / cfg.cov_samples as f64)
                .sqrt();
            let diff = (covariances[0][p * n_h + q] - covariances[1][p * n_h + q]).abs();
            cross = cross.max(diff / (se * 2.0f64.sqrt()));
        }
    }
    Ok(CovCheckOutput {
        records,
        cross_strategy_max_se: cross,
    })
}
