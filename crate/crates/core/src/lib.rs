//! Spatially distributed coevolutionary GAN training.
//!
//! Every cell of a toroidal grid owns one generator and one discriminator and
//! trains them against copies of its four neighbors' models, on its own
//! subsample of the training data. After training, each neighborhood's
//! generators are fused into a weighted mixture whose weights are evolved by a
//! (1+1) evolution strategy, and the best mixture on the grid is returned.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the precision used by the experiment harness.

pub mod analysis;
pub mod coev;
pub mod dataset;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod matrix;
pub mod mixture;
pub mod nn;
pub mod scalar;
pub mod scoring;
pub mod seed;

pub use error::{Error, Result};
pub use grid::{CellId, GridConfig, Neighborhood, SnapshotBoard};
pub use matrix::Matrix;
pub use nn::{ModelParams, ModelSnapshot};
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type ModelParams64 = ModelParams<f64>;
pub type ModelParams32 = ModelParams<f32>;
pub type ModelSnapshot64 = ModelSnapshot<f64>;
pub type ModelSnapshot32 = ModelSnapshot<f32>;
pub type SnapshotBoard64 = SnapshotBoard<f64>;
pub type GaussianSummary64 = scoring::GaussianSummary<f64>;
pub type GaussianSummary32 = scoring::GaussianSummary<f32>;
pub type MixtureWeights64 = mixture::MixtureWeights<f64>;
pub type MixtureWeights32 = mixture::MixtureWeights<f32>;
