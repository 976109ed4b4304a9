//! Batch driver for the convergence studies: strong error against a
//! shared overkill reference, weak-type error by Monte Carlo, quadrature
//! and covariance checks, log-log rate regression and CSV emission.

pub mod config;
pub mod csvio;
pub mod studies;
