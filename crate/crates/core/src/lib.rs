//! Deep-and-wide learning toolkit: Bayesian dimensionality reduction, a
//! small neural-network core and the dual-channel network that fuses them.
//!
//! Everything numeric is generic over [`Scalar`] (`f64` or `f32`); the
//! aliases below fix the double-precision types used by the tools.

pub mod bdr;
pub mod datasets;
pub mod dnet;
pub mod metrics;
pub mod nn;
pub mod numerics;
pub mod scalar;

pub use scalar::Scalar;

pub type RealMatrix = numerics::Matrix<f64>;
pub type RealTensor = nn::Tensor<f64>;
pub type RealDataset = datasets::Dataset<f64>;
pub type BdrState = bdr::BdrState<f64>;
pub type BdrModel = bdr::BdrModel<f64>;
pub type FitReport = bdr::FitReport<f64>;
pub type DNetModel = dnet::DNetModel<f64>;
