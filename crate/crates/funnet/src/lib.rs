//! Functional neural networks for discretized functional data.
//!
//! Observations are noisy samples of smooth functions on a uniform grid over
//! the unit interval. The pipeline smooths them with a local polynomial
//! estimator, standardizes each signal, and feeds the result through
//! shift-invariant functional convolutional layers and basis-expanded
//! functional dense layers. Training runs on plain scalar backpropagation
//! over the basis coefficients.
//!
//! Modules:
//! - [`curves`]: grids, curves, quadrature, sliding windows
//! - [`smoothing`]: local polynomial estimation and its filter form
//! - [`basis`]: Legendre/Fourier basis evaluation and expansion
//! - [`layers`]: functional layer forward semantics
//! - [`engine`]: models, gradients, optimizers, training
//! - [`datagen`]: seeded generators for the simulated data sets
//! - [`knn`]: functional k-nearest-neighbors baseline
//! - [`metrics`]: confusion matrices and classification metrics
//! - [`io`]: CSV ingestion and export

pub mod basis;
pub mod curves;
pub mod datagen;
pub mod engine;
pub mod error;
pub mod io;
pub mod knn;
pub mod layers;
mod mat;
pub mod metrics;
pub mod smoothing;

pub use error::{Error, Result};

/// Library version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
