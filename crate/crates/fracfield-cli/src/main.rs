//! Command-line driver: `fracfield <study> [flags]`.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use fracfield::fractional::{build_grid, Calibration};
use fracfield::mesh::{assemble, build_mesh};
use fracfield::sampler::{build_noise_factor, sample_solution, FactorStrategy};

use fracfield_cli::config::{
    apply_file_values, parse_f64_list, parse_usize_list, read_config_file, ExperimentConfig,
    StudyKind,
};
use fracfield_cli::csvio;
use fracfield_cli::studies;

#[derive(Parser)]
#[command(
    name = "fracfield",
    about = "Samples Gaussian random fields on (0,1)^d via the fractional SPDE (κ²−Δ)^β u = 𝒲 \
             and reproduces the quadrature and convergence studies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonOpts {
    /// Spatial dimension (1, 2 or 3)
    #[arg(long)]
    dim: Option<usize>,
    /// Single mesh: subintervals per axis
    #[arg(long)]
    n: Option<usize>,
    /// Mesh sequence, e.g. 32,64,128
    #[arg(long)]
    meshes: Option<String>,
    /// Fractional exponent β in (0,1)
    #[arg(long)]
    beta: Option<f64>,
    /// Shift κ of the operator κ² − Δ
    #[arg(long)]
    kappa: Option<f64>,
    /// Base seed of the deterministic RNG streams
    #[arg(long)]
    seed: Option<u64>,
    /// Strong-study sample count
    #[arg(long)]
    samples: Option<usize>,
    /// Weak-study Monte Carlo draw count
    #[arg(long)]
    mc: Option<usize>,
    /// Overkill truncation N_ok per axis
    #[arg(long)]
    overkill: Option<usize>,
    /// h-to-k calibration: strong | weak | experiment
    #[arg(long)]
    calibration: Option<String>,
    /// Flat key = value config file; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (CSV, or sample text for `sample`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to the core count)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write one realization of the field u^Q to a sample file
    Sample(CommonOpts),
    /// Strong (pathwise) error study against a shared overkill reference
    Strong(CommonOpts),
    /// Weak-type error study |E‖u‖² − E‖u_hk‖²| by Monte Carlo
    Weak(CommonOpts),
    /// Operator-norm discrepancy of the sinc quadrature over a k sweep
    QuadCheck {
        #[command(flatten)]
        common: CommonOpts,
        /// Quadrature steps to sweep, e.g. 0.5,0.4,0.3,0.25
        #[arg(long)]
        ks: Option<String>,
    },
    /// Factorization identity and sample covariance of the noise loads
    CovCheck(CommonOpts),
}

fn build_config(study: StudyKind, opts: &CommonOpts, ks: Option<&str>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(study, 1, 0.5);
    let mut dim_from_file = false;
    let mut nok_pinned = opts.overkill.is_some();
    if let Some(path) = &opts.config {
        let map = read_config_file(path).map_err(anyhow::Error::msg)?;
        dim_from_file = map.contains_key("dim");
        nok_pinned |= map.contains_key("n_ok");
        apply_file_values(&mut cfg, &map).map_err(anyhow::Error::msg)?;
        cfg.study = study;
    }
    if let Some(d) = opts.dim {
        cfg.dim = d;
    } else if !dim_from_file {
        bail!("--dim is required (or supply it via --config)");
    }
    // the final dimension decides the default overkill size unless pinned
    if !nok_pinned {
        cfg.n_ok = fracfield_cli::config::default_n_ok(cfg.dim);
    }
    if let Some(b) = opts.beta {
        cfg.beta = b;
    }
    if let Some(k) = opts.kappa {
        cfg.kappa = k;
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(s) = opts.samples {
        cfg.n_samples = s;
    }
    if let Some(m) = opts.mc {
        cfg.n_mc = m;
    }
    if let Some(o) = opts.overkill {
        cfg.n_ok = o;
    }
    if let Some(c) = &opts.calibration {
        cfg.calibration = c.parse().context("bad --calibration")?;
    }
    if let Some(m) = &opts.meshes {
        cfg.mesh_ns = parse_usize_list(m).map_err(anyhow::Error::msg)?;
    }
    if let Some(n) = opts.n {
        cfg.single_n = Some(n);
    }
    if let Some(out) = &opts.out {
        cfg.out = Some(out.clone());
    }
    if let Some(list) = ks {
        cfg.ks = parse_f64_list(list).map_err(anyhow::Error::msg)?;
    }
    cfg.validate().map_err(anyhow::Error::msg)?;
    Ok(cfg)
}

#[cfg(feature = "parallel")]
fn init_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn init_threads(_threads: Option<usize>) {}

fn out_path(cfg: &ExperimentConfig) -> anyhow::Result<&PathBuf> {
    cfg.out.as_ref().context("--out is required")
}

fn run_sample(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let n = cfg.single_n.context("--n is required for sample")?;
    let mesh = build_mesh(cfg.dim, n)?;
    let fem = assemble(&mesh, cfg.kappa)?;
    let k = Calibration::on_cube(cfg.calibration, cfg.beta, cfg.dim).k(mesh.diameter())?;
    let grid = build_grid(cfg.beta, k)?;
    let factor = build_noise_factor(&mesh, &fem, FactorStrategy::default_for_dim(cfg.dim))?;
    let sample = sample_solution(&mesh, &fem, &grid, &factor, None, cfg.seed, 0)?;
    let path = out_path(cfg)?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    sample.write_to(&mut file)?;
    csvio::write_manifest(path, cfg)?;
    println!(
        "wrote sample: dim={} n={} N_h={} beta={} nodes={} -> {}",
        cfg.dim,
        n,
        mesh.interior_nodes(),
        cfg.beta,
        grid.node_count(),
        path.display()
    );
    Ok(())
}

fn print_fit(fit: &std::result::Result<studies::RateFit, studies::HarnessError>) {
    match fit {
        Ok(f) => {
            print!("rate = {:.4} (intercept {:.4})", f.rate, f.intercept);
            if f.is_high_variance() {
                print!("  [high-variance fit, residual {:.3}]", f.residual);
            }
            println!();
        }
        Err(e) => println!("rate fit failed: {e}"),
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Sample(opts) => {
            init_threads(opts.threads);
            let cfg = build_config(StudyKind::Sample, opts, None)?;
            run_sample(&cfg)?;
        }
        Command::Strong(opts) => {
            init_threads(opts.threads);
            let cfg = build_config(StudyKind::Strong, opts, None)?;
            let out = studies::strong_study(&cfg)?;
            let path = out_path(&cfg)?;
            csvio::write_strong_csv(path, &out)?;
            csvio::write_manifest(path, &cfg)?;
            for r in &out.records {
                println!(
                    "n_h={:<7} h={:<10.6} k={:<9.6} nodes={:<5} err={:.6e}  ({} ms)",
                    r.n_h, r.h, r.k, r.node_count, r.error, r.wall_ms
                );
            }
            print_fit(&out.fit);
            println!("overkill tail ratio = {:.3e}", out.tail_ratio);
            if out.tail_ratio > 0.01 {
                println!(
                    "note: spectral truncation tail exceeds 1% of the smallest squared error; \
                     raise --overkill to tighten the reference"
                );
            }
        }
        Command::Weak(opts) => {
            init_threads(opts.threads);
            let cfg = build_config(StudyKind::Weak, opts, None)?;
            let out = studies::weak_study(&cfg)?;
            let path = out_path(&cfg)?;
            csvio::write_weak_csv(path, &out)?;
            csvio::write_manifest(path, &cfg)?;
            println!("analytic reference E‖u‖² = {:.8}", out.reference);
            for (i, r) in out.records.iter().enumerate() {
                println!(
                    "n_h={:<7} h={:<10.6} estimate={:.6} (se {:.2e}) err={:.6e}  ({} ms)",
                    r.n_h, r.h, out.estimates[i], out.stderrs[i], r.error, r.wall_ms
                );
            }
            print_fit(&out.fit);
        }
        Command::QuadCheck { common, ks } => {
            init_threads(common.threads);
            let cfg = build_config(StudyKind::QuadCheck, common, ks.as_deref())?;
            let out = studies::quad_check_study(&cfg)?;
            let path = out_path(&cfg)?;
            csvio::write_quad_check_csv(path, &out)?;
            csvio::write_manifest(path, &cfg)?;
            for r in &out.records {
                println!(
                    "k={:<7} nodes={:<5} discrepancy={:.6e}  ({} ms)",
                    r.k, r.node_count, r.discrepancy, r.wall_ms
                );
            }
            println!(
                "slope in 1/k = {:.4} (sinc rate predicts {:.4})",
                out.slope,
                -std::f64::consts::PI * std::f64::consts::PI / 2.0
            );
        }
        Command::CovCheck(opts) => {
            init_threads(opts.threads);
            let cfg = build_config(StudyKind::CovCheck, opts, None)?;
            let out = studies::cov_check_study(&cfg)?;
            let path = out_path(&cfg)?;
            csvio::write_cov_check_csv(path, &out)?;
            csvio::write_manifest(path, &cfg)?;
            for r in &out.records {
                println!(
                    "{:?}: factor_rel_err={:.3e} max_se_units={:.2}  ({} ms)",
                    r.strategy, r.factor_rel_err, r.max_se_units, r.wall_ms
                );
            }
            println!("cross-strategy max SE units = {:.2}", out.cross_strategy_max_se);
        }
    }
    Ok(())
}
