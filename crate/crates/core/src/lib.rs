//! Smoothing-parameter-commutation (SPC) distances between irregularly
//! sampled curves.
//!
//! Each subject is smoothed by a natural cubic spline whose smoothing
//! parameter is chosen by REML. The SPC distance between two subjects averages
//! the L2 distances of their curves refitted under each other's smoothing
//! parameter. Around that sit baseline distances, kNN outlier scores, PAM
//! clustering and a simulation benchmark.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod cluster;
pub mod dataset;
pub mod distance;
mod error;
pub mod scalar;
pub mod simbench;
pub mod spline;

pub use error::{Error, Result};
pub use scalar::{fmt_full, Real};

pub type Subject = dataset::Subject<f64>;
pub type Dataset = dataset::Dataset<f64>;
pub type SplineFit = spline::SplineFit<f64>;
pub type RemlSelection = spline::RemlSelection<f64>;
pub type MixedModelParts = spline::MixedModelParts<f64>;
pub type DissimilarityMatrix = distance::DissimilarityMatrix<f64>;
pub type FitCache = distance::FitCache<f64>;
pub type OutlierReport = cluster::OutlierReport<f64>;
pub type Clustering = cluster::Clustering<f64>;
