//! HTTP API and command-line front ends over `loadcast-core`.
//!
//! [`ops`] holds one function per operation. [`api`] exposes them as HTTP
//! routes and the `loadcast` binary as subcommands; both serialize results
//! with [`ops::to_json`].

pub mod api;
pub mod config;
pub mod error;
pub mod ops;

pub use config::ServiceConfig;
pub use error::{ApiError, ErrorCode};
