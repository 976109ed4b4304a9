//! CSV and run-manifest emission.
//!
//! Rate-study schema: header `h,N_h,k,nodes,error,wall_ms`, one row per
//! mesh, then footer lines `#rate=`, `#intercept=` (plus study-specific
//! diagnostics). The wall_ms column is placed last and excluded from the
//! determinism contract; everything else is byte-reproducible for a
//! fixed config and seed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::studies::{
    CovCheckOutput, ErrorRecord, QuadCheckOutput, RateFit, Result, StrongOutput, WeakOutput,
};

fn open(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_rate_rows(
    out: &mut impl Write,
    records: &[ErrorRecord],
    fit: &std::result::Result<RateFit, crate::studies::HarnessError>,
) -> Result<()> {
    writeln!(out, "h,N_h,k,nodes,error,wall_ms").map_err(crate::studies::HarnessError::Io)?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.h, r.n_h, r.k, r.node_count, r.error, r.wall_ms
        )
        .map_err(crate::studies::HarnessError::Io)?;
    }
    match fit {
        Ok(f) => {
            writeln!(out, "#rate={}", f.rate).map_err(crate::studies::HarnessError::Io)?;
            writeln!(out, "#intercept={}", f.intercept)
                .map_err(crate::studies::HarnessError::Io)?;
            if f.is_high_variance() {
                writeln!(out, "#high_variance_residual={}", f.residual)
                    .map_err(crate::studies::HarnessError::Io)?;
            }
        }
        Err(e) => {
            writeln!(out, "#rate_error={e}").map_err(crate::studies::HarnessError::Io)?;
        }
    }
    Ok(())
}

pub fn write_strong_csv(path: &Path, output: &StrongOutput) -> Result<()> {
    let mut out = open(path)?;
    write_rate_rows(&mut out, &output.records, &output.fit)?;
    // documented overkill-truncation diagnostic: spectral tail bound over
    // the smallest observed squared error
    writeln!(out, "#tail_ratio={}", output.tail_ratio)
        .map_err(crate::studies::HarnessError::Io)?;
    Ok(())
}

pub fn write_weak_csv(path: &Path, output: &WeakOutput) -> Result<()> {
    let mut out = open(path)?;
    write_rate_rows(&mut out, &output.records, &output.fit)?;
    writeln!(out, "#reference={}", output.reference).map_err(crate::studies::HarnessError::Io)?;
    Ok(())
}

pub fn write_quad_check_csv(path: &Path, output: &QuadCheckOutput) -> Result<()> {
    let mut out = open(path)?;
    writeln!(out, "k,nodes,discrepancy,wall_ms").map_err(crate::studies::HarnessError::Io)?;
    for r in &output.records {
        writeln!(out, "{},{},{},{}", r.k, r.node_count, r.discrepancy, r.wall_ms)
            .map_err(crate::studies::HarnessError::Io)?;
    }
    writeln!(out, "#slope={}", output.slope).map_err(crate::studies::HarnessError::Io)?;
    writeln!(out, "#intercept={}", output.intercept).map_err(crate::studies::HarnessError::Io)?;
    Ok(())
}

pub fn write_cov_check_csv(path: &Path, output: &CovCheckOutput) -> Result<()> {
    let mut out = open(path)?;
    writeln!(out, "strategy,N_h,samples,factor_rel_err,max_se_units,wall_ms")
        .map_err(crate::studies::HarnessError::Io)?;
    for r in &output.records {
        let name = match r.strategy {
            fracfield::sampler::FactorStrategy::GlobalCholesky => "global-cholesky",
            fracfield::sampler::FactorStrategy::PerElement => "per-element",
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            name, r.n_h, r.samples, r.factor_rel_err, r.max_se_units, r.wall_ms
        )
        .map_err(crate::studies::HarnessError::Io)?;
    }
    writeln!(out, "#cross_strategy_max_se={}", output.cross_strategy_max_se)
        .map_err(crate::studies::HarnessError::Io)?;
    Ok(())
}

/// Manifest path of an output file: `<out>.manifest`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    out.with_file_name(name)
}

/// Writes the resolved configuration next to the output file.
pub fn write_manifest(out: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let mut w = open(&manifest_path(out))?;
    w.write_all(cfg.manifest().as_bytes())
        .map_err(crate::studies::HarnessError::Io)?;
    Ok(())
}
