//! Estimation of the roughness parameter `H`, the integrated volatility and
//! the integrated noise variance of a fractional process observed at high
//! frequency with additive measurement noise.
//!
//! The estimators pre-average noisy increments with a weight function `g`
//! over windows of `k ≈ n^κ/θ` observations, compare sums of squared
//! pre-averaged increments at two sampling frequencies to identify `H`, and
//! adapt `κ` to the estimated roughness.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the CLI and the
//! experiment harnesses use.

pub mod error;
pub mod estimate;
mod fft;
pub mod montecarlo;
pub mod pipeline;
pub mod preavg;
mod quadrature;
pub mod scalar;
pub mod seed;
pub mod simulate;

pub use error::{Error, IterationRecord, Result};
pub use scalar::Real;

pub type Hurst = simulate::Hurst<f64>;
pub type SampledPath = simulate::SampledPath<f64>;
pub type SimConfig = simulate::SimConfig<f64>;
pub type Schedule = simulate::Schedule<f64>;
pub type WeightSpec = preavg::WeightSpec<f64>;
pub type DiscretizedWeights = preavg::DiscretizedWeights<f64>;
pub type PreAvgConfig = preavg::PreAvgConfig<f64>;
pub type TestFunction = preavg::TestFunction<f64>;
pub type EstimationOptions = estimate::EstimationOptions<f64>;
pub type MCScenario = montecarlo::MCScenario<f64>;

pub use estimate::{EstimationResult, HurstEstimate};
pub use montecarlo::{MCRow, McTable};
pub use pipeline::{RawSeries, SweepConfig, SweepReport};
pub use simulate::{Kernel, NoiseDist};
