//! Scalar-lattice dirty paper coding: grid densities, scalar modulo-ASK channels with
//! probabilistic shaping, the whitening and SVD decomposition of a Gaussian vector broadcast
//! channel, and a seeded Monte Carlo simulator.
//!
//! The `density` and `dpc` modules are generic over the float type; `mimo` and `montecarlo`
//! work in `f64`.

pub mod density;
pub mod dpc;
pub mod error;
pub mod mimo;
pub mod montecarlo;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type GridDensityF64 = density::GridDensity<f64>;
pub type GridDensityF32 = density::GridDensity<f32>;
pub type ShapingF64 = dpc::Shaping<f64>;
pub type ShapingF32 = dpc::Shaping<f32>;
pub type ScalarDpcConfigF64 = dpc::ScalarDpcConfig<f64>;
pub type ScalarDpcConfigF32 = dpc::ScalarDpcConfig<f32>;
pub type ScalarAnalysisF64 = dpc::ScalarAnalysis<f64>;
pub type ScalarAnalysisF32 = dpc::ScalarAnalysis<f32>;
