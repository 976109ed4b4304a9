//! Declarative experiment configuration: flat `key = value` files with
//! the field names below, overridable by CLI flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fracfield::fractional::CalibrationMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Strong,
    Weak,
    QuadCheck,
    CovCheck,
    Sample,
}

impl std::fmt::Display for StudyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StudyKind::Strong => "strong",
            StudyKind::Weak => "weak",
            StudyKind::QuadCheck => "quad-check",
            StudyKind::CovCheck => "cov-check",
            StudyKind::Sample => "sample",
        })
    }
}

impl std::str::FromStr for StudyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "strong" => Ok(StudyKind::Strong),
            "weak" => Ok(StudyKind::Weak),
            "quad-check" => Ok(StudyKind::QuadCheck),
            "cov-check" => Ok(StudyKind::CovCheck),
            "sample" => Ok(StudyKind::Sample),
            other => Err(format!("unknown study '{other}'")),
        }
    }
}

/// Everything a study run depends on. Defaults are desk-scale: the
/// overkill truncations are 2^13+1 (d=1), 2^9+1 (d=2) and 129 (d=3).
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub study: StudyKind,
    pub dim: usize,
    pub beta: f64,
    pub kappa: f64,
    /// Mesh refinement sequence (subintervals per axis), strictly increasing.
    pub mesh_ns: Vec<usize>,
    /// Single mesh for sample / quad-check / cov-check runs.
    pub single_n: Option<usize>,
    /// Per-axis overkill truncation N_ok.
    pub n_ok: usize,
    /// Strong-study sample count.
    pub n_samples: usize,
    /// Weak-study Monte Carlo sample count.
    pub n_mc: usize,
    /// cov-check draw count.
    pub cov_samples: usize,
    pub calibration: CalibrationMode,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Quadrature steps for quad-check sweeps.
    pub ks: Vec<f64>,
    /// Test hook: force every overkill coefficient ξ to zero.
    pub zero_noise: bool,
}

pub fn default_n_ok(dim: usize) -> usize {
    match dim {
        1 => (1 << 13) + 1,
        2 => (1 << 9) + 1,
        _ => 129,
    }
}

impl ExperimentConfig {
    pub fn new(study: StudyKind, dim: usize, beta: f64) -> Self {
        ExperimentConfig {
            study,
            dim,
            beta,
            kappa: 0.5,
            mesh_ns: Vec::new(),
            single_n: None,
            n_ok: default_n_ok(dim),
            n_samples: 50,
            n_mc: 1000,
            cov_samples: 20_000,
            calibration: CalibrationMode::Experiment,
            seed: 0,
            out: None,
            ks: Vec::new(),
            zero_noise: false,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(1..=3).contains(&self.dim) {
            return Err(format!("dim {} not in 1..=3", self.dim));
        }
        if !(0.0 < self.beta && self.beta < 1.0) {
            return Err(format!("beta {} outside (0,1)", self.beta));
        }
        if self.kappa < 0.0 {
            return Err(format!("kappa {} negative", self.kappa));
        }
        match self.study {
            StudyKind::Strong | StudyKind::Weak => {
                if self.mesh_ns.len() < 2 {
                    return Err("rate studies need at least two meshes".into());
                }
                if self.mesh_ns.windows(2).any(|w| w[0] >= w[1]) {
                    return Err("mesh_ns must be strictly increasing".into());
                }
                // positive-rate regime β > d/4
                if 4.0 * self.beta <= self.dim as f64 {
                    return Err(format!(
                        "study needs 4β > d for a positive rate (β={}, d={})",
                        self.beta, self.dim
                    ));
                }
                if self.study == StudyKind::Strong && self.n_samples == 0 {
                    return Err("n_samples must be positive".into());
                }
                if self.study == StudyKind::Weak && self.n_mc == 0 {
                    return Err("n_mc must be positive".into());
                }
            }
            StudyKind::QuadCheck => {
                if self.single_n.is_none() {
                    return Err("quad-check needs a mesh size (n)".into());
                }
                if self.ks.is_empty() {
                    return Err("quad-check needs a list of quadrature steps (ks)".into());
                }
                if self.ks.iter().any(|&k| k <= 0.0) {
                    return Err("quadrature steps must be positive".into());
                }
            }
            StudyKind::CovCheck | StudyKind::Sample => {
                if self.single_n.is_none() {
                    return Err(format!("{} needs a mesh size (n)", self.study));
                }
            }
        }
        Ok(())
    }

    /// Resolved configuration as `key = value` lines; written as the run
    /// manifest and accepted back through `--config`.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("study = {}\n", self.study));
        s.push_str(&format!("dim = {}\n", self.dim));
        s.push_str(&format!("beta = {}\n", self.beta));
        s.push_str(&format!("kappa = {}\n", self.kappa));
        if !self.mesh_ns.is_empty() {
            let list: Vec<String> = self.mesh_ns.iter().map(|n| n.to_string()).collect();
            s.push_str(&format!("mesh_ns = {}\n", list.join(",")));
        }
        if let Some(n) = self.single_n {
            s.push_str(&format!("n = {n}\n"));
        }
        s.push_str(&format!("n_ok = {}\n", self.n_ok));
        s.push_str(&format!("n_samples = {}\n", self.n_samples));
        s.push_str(&format!("n_mc = {}\n", self.n_mc));
        s.push_str(&format!("cov_samples = {}\n", self.cov_samples));
        s.push_str(&format!("calibration = {}\n", self.calibration));
        s.push_str(&format!("seed = {}\n", self.seed));
        if let Some(out) = &self.out {
            s.push_str(&format!("out = {}\n", out.display()));
        }
        if !self.ks.is_empty() {
            let list: Vec<String> = self.ks.iter().map(|k| k.to_string()).collect();
            s.push_str(&format!("ks = {}\n", list.join(",")));
        }
        if self.zero_noise {
            s.push_str("zero_noise = true\n");
        }
        s
    }
}

/// Parses a flat `key = value` config file; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key = value", path.display(), lineno + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|e| format!("list entry '{tok}': {e}"))
        })
        .collect()
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|e| format!("list entry '{tok}': {e}"))
        })
        .collect()
}

/// Applies config-file values onto `cfg`; unknown keys are rejected.
pub fn apply_file_values(
    cfg: &mut ExperimentConfig,
    map: &BTreeMap<String, String>,
) -> Result<(), String> {
    for (key, value) in map {
        match key.as_str() {
            "study" => cfg.study = value.parse()?,
            "dim" => cfg.dim = value.parse().map_err(|e| format!("dim: {e}"))?,
            "beta" => cfg.beta = value.parse().map_err(|e| format!("beta: {e}"))?,
            "kappa" => cfg.kappa = value.parse().map_err(|e| format!("kappa: {e}"))?,
            "mesh_ns" => cfg.mesh_ns = parse_usize_list(value)?,
            "n" => cfg.single_n = Some(value.parse().map_err(|e| format!("n: {e}"))?),
            "n_ok" => cfg.n_ok = value.parse().map_err(|e| format!("n_ok: {e}"))?,
            "n_samples" => cfg.n_samples = value.parse().map_err(|e| format!("n_samples: {e}"))?,
            "n_mc" => cfg.n_mc = value.parse().map_err(|e| format!("n_mc: {e}"))?,
            "cov_samples" => {
                cfg.cov_samples = value.parse().map_err(|e| format!("cov_samples: {e}"))?
            }
            "calibration" => {
                cfg.calibration = value.parse().map_err(|e| format!("calibration: {e}"))?
            }
            "seed" => cfg.seed = value.parse().map_err(|e| format!("seed: {e}"))?,
            "out" => cfg.out = Some(PathBuf::from(value)),
            "ks" => cfg.ks = parse_f64_list(value)?,
            "zero_noise" => {
                cfg.zero_noise = value.parse().map_err(|e| format!("zero_noise: {e}"))?
            }
            other => return Err(format!("unknown config key '{other}'")),
        }
    }
    Ok(())
}
