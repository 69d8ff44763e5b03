//! Negative-expected-value slot-machine harness for probing gambling-like
//! behavior in LLM agents, with the metrics, statistics and activation
//! feature analyses that go with it.
//!
//! Metric and statistics kernels are generic over [`Real`] (`f32` or `f64`);
//! the aliases below fix the common `f64` instantiations.

pub mod agents;
pub mod features;
pub mod game;
pub mod metrics;
pub mod prompt;
pub mod runner;
pub mod scalar;
pub mod stats;

pub use scalar::Real;

pub type TranscriptMetrics = metrics::TranscriptMetrics<f64>;
pub type TranscriptMetrics32 = metrics::TranscriptMetrics<f32>;
pub type IndexWeights = metrics::IndexWeights<f64>;
pub type ConditionAggregate = stats::ConditionAggregate<f64>;
pub type MeanSe = stats::MeanSe<f64>;
pub type WelchTest = stats::WelchTest<f64>;
pub type BhResult = stats::BhResult<f64>;
pub type ComplexityTrend = stats::ComplexityTrend<f64>;

/// Version string written into experiment manifests.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
