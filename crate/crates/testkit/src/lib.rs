//! Test support: an independent boosting oracle, synthetic load series, and
//! published tables replayed as fixtures.

pub mod fixtures;
pub mod oracle;
pub mod synthetic;
