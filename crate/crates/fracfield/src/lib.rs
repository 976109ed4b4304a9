//! Gaussian random fields on the unit cube (0,1)^d, d = 1, 2, 3, sampled
//! by solving the fractional elliptic SPDE (κ² − Δ)^β u = 𝒲 with
//! homogeneous Dirichlet boundary conditions.
//!
//! The pipeline: a Q1 finite element discretization on a uniform
//! tensor-product grid ([`mesh`]), white noise realized as N(0, M) load
//! vectors through a factorization of the mass matrix ([`sampler`]), and
//! the inverse fractional operator applied through an exponentially
//! convergent sinc quadrature of resolvent solves ([`fractional`]).
//! Closed-form spectral references on the cube ([`spectral`]) provide
//! the oracles: exact eigenpairs, overkill Karhunen-Loève solutions and
//! analytic norms used by the convergence studies.
//!
//! The data-parallel loops (quadrature nodes, spectral contractions)
//! run on rayon under the default `parallel` feature and fall back to
//! sequential iterators without it; results are bit-identical either
//! way.

// index loops mirror the matrix math; the iterator forms read worse here
#![allow(clippy::needless_range_loop)]

pub mod error;
mod exec;
pub mod fractional;
pub mod mesh;
pub mod rng;
pub mod sampler;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
