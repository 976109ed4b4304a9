use thiserror::Error;

/// Errors produced by the numeric kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix not positive definite")]
    NotPositiveDefinite,

    #[error("solver did not converge within {max_iter} iterations (residual {achieved:e}, target {target:e})")]
    NoConvergence {
        max_iter: usize,
        achieved: f64,
        target: f64,
    },

    #[error("dense reference routine invoked on dimension {n} above cap {cap}; dense oracles are meant for small meshes only")]
    DenseCapExceeded { n: usize, cap: usize },

    #[error("operator is not self-adjoint in the mass inner product (asymmetry {0:e})")]
    NotSelfAdjoint(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resolvent solve failed at quadrature node {node}: {source}")]
    ResolventSolve {
        node: i64,
        #[source]
        source: Box<Error>,
    },

    #[error("series diverges: 4*beta must exceed the spatial dimension (beta={beta}, dim={dim})")]
    DivergentSeries { beta: f64, dim: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed sample file: {0}")]
    MalformedSample(String),
}

pub type Result<T> = std::result::Result<T, Error>;
