//! Nearest-neighbor Gaussian process (NNGP) and clustered NNGP (cNNGP)
//! regression for point-referenced spatial data.
//!
//! The numeric core is generic over a [`Real`] scalar (`f32` or `f64`);
//! the aliases at the crate root fix the scalar to `f64`, which is what the
//! sampler, the simulation harness and the file formats use.

pub mod clustering;
pub mod covariance;
pub mod evaluation;
mod error;
pub mod factors;
pub mod geometry;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod prediction;
mod real;
pub mod simharness;

pub use error::{Error, Result};
pub use real::Real;

pub use clustering::{ClusterModel, ClusterSettings};
pub use covariance::{CovarianceParams, DistanceMatrix, Kernel, NoiseParams};
pub use factors::{FactorLayout, FactorMode, FactorSet};
pub use geometry::{NeighborGraph, Point2, SpatialDataset};
pub use inference::{PosteriorChain, PriorSpec, SamplerConfig};
pub use prediction::{PredictionResult, PredictionSettings};

pub type Coords = Vec<Point2<f64>>;
pub type Dataset = SpatialDataset<f64>;
pub type Params = CovarianceParams<f64>;
pub type Factors = FactorSet<f64>;
pub type Clusters = ClusterModel<f64>;
pub type Priors = PriorSpec<f64>;
pub type Chain = PosteriorChain<f64>;
pub type Prediction = PredictionResult<f64>;
