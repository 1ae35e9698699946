//! Forecasting workbench for daily index data.
//!
//! The pipeline runs from raw OHLCV bars ([`market_data`]) to the nine derived
//! variables ([`features`]), through fifteen shallow learners ([`models`]) and
//! an LSTM ([`lstm`]) evaluated on weekly walk-forward windows ([`harness`]),
//! and on to mood-driven analysis: lexicon scoring ([`sentiment`]), Granger
//! causality ([`granger`]) and a self-organizing fuzzy neural network
//! ([`sofnn`]).
//!
//! Numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision used by the pipeline.

pub mod error;
pub mod features;
pub mod granger;
pub mod harness;
pub mod linalg;
pub mod lstm;
pub mod market_data;
pub mod metrics;
pub mod models;
pub mod persist;
pub mod rng;
pub mod scalar;
pub mod sentiment;
pub mod sofnn;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Pipeline precision.
pub type Real = f64;

pub type RegressionReport64 = metrics::RegressionReport<f64>;
pub type GrangerResult64 = granger::GrangerResult<f64>;
pub type GrangerGrid64 = granger::GrangerGrid<f64>;
pub type Matrix64 = linalg::Matrix<f64>;
