//! Heterogeneous attributed network recommender.
//!
//! End-to-end pipeline for rating prediction and link prediction on graphs
//! with typed, attributed nodes: potential-neighbor discovery through
//! second-order paths, attention-weighted homogeneous/heterogeneous neighbor
//! aggregation, MLP fusion and scoring, and mini-batch MSE training with
//! Adam — plus dataset loaders, metrics, and a seeded experiment harness.
//!
//! All numeric code is generic over [`scalar::Scalar`]; `f32` is the fast
//! training type and `f64` the verification type (gradient checks, dense
//! oracles). Concrete aliases live at the crate root.

pub mod connector;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod nn;
pub mod rng;
pub mod scalar;
pub mod tape;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Fast training scalar.
pub type TrainScalar = f32;
/// High-precision scalar for verification paths.
pub type CheckScalar = f64;

pub type Tensor32 = tensor::Tensor<f32>;
pub type Tensor64 = tensor::Tensor<f64>;
