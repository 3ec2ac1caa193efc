//! Electricity load forecasting: ingestion of load exports, data-quality
//! auditing, gradient-boosted regression trees, feature construction,
//! the per-horizon forecasting engine, and evaluation metrics.

pub mod countries;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod gbrt;
pub mod ingestion;
pub mod quality;
pub mod stats;

pub use error::{Error, Result};
