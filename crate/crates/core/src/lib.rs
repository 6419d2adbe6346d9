//! Robust (L1-norm) principal component analysis through Ising-form binary
//! optimization.
//!
//! The pipeline turns a `D x N` data matrix into an Ising problem over sign
//! vectors, fits it under a coupler budget by banding the coupling matrix,
//! solves it with an interchangeable backend and maps the winning signs back
//! to an orthonormal basis.
//!
//! - [`linalg`]: Gram matrices, SVD, nuclear norm, nearest orthonormal matrix,
//!   nullspace deflation.
//! - [`ising`]: problems, sample sets, exhaustive/annealing/remote solvers and a
//!   mock annealer service.
//! - [`embedding`]: coupler counts, band selection, banded single and
//!   multi-component layouts, and the layout cache.
//! - [`qapca`]: single-component, recursive and simultaneous multi-component
//!   solvers plus the epsilon-bound helpers.
//! - [`baselines`]: SVD PCA and bit-flipping L1-PCA.
//! - [`eval`]: data generation, corruption, CSV ingestion and metrics.
//! - [`experiment`]: the benchmark protocols behind the `qapca` binary.

pub mod baselines;
pub mod cli;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod ising;
pub mod linalg;
pub mod qapca;

pub use error::{Error, Result};
pub use linalg::{ComponentBasis, DataMatrix};
