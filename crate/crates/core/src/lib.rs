//! Simulation and verification toolkit for superextremal processes.
//!
//! A superextremal process is the record process of a Poisson point measure
//! on function space: each point carries a magnitude, an arrival time, and a
//! spectral profile over a finite grid of sites, and the process value at
//! time `u` and site `t` is the largest magnitude-weighted profile value
//! among the points that have arrived by `u`. Such processes arise as limits
//! of running maxima of triangular arrays of independent processes; the
//! canonical pre-limit implemented here is the log-normal array built from a
//! Gaussian process with a fractional variogram.
//!
//! The crate is organized bottom-up:
//!
//! - [`domain`]: spatial grids and variogram models;
//! - [`gauss`]: Gaussian machinery — norming constants, covariance families,
//!   factorized sampling, and the conditional closed forms;
//! - [`ppp`]: Poisson point measures, spectral samplers, and the maps that
//!   turn a measure into spatial maxima, running maxima, and order
//!   statistics;
//! - [`empirical`]: partial maxima and order statistics of finite batches;
//! - [`fdd`]: exponent-measure estimation and finite-dimensional
//!   distributions, both theoretical and empirical;
//! - [`stattest`]: Kolmogorov-Smirnov machinery and the distributional
//!   property tests (max-stability, self-similarity, Markov splicing, order
//!   statistics convergence);
//! - [`rng`]: seeded, stream-indexed random number generation used by every
//!   stochastic routine.

pub mod domain;
pub mod empirical;
pub mod error;
pub mod fdd;
pub mod gauss;
pub mod ppp;
pub mod rng;
pub mod stattest;

pub use error::{Error, Result};
