//! Std side of the self-regulated-learning dashboard: text formats, run
//! configuration, the generation-based content store, the usage log, the
//! HTTP API and the `srl-dash` CLI plumbing. Algorithms live in
//! `srl_dash_core`.

pub mod config;
pub mod error;
pub mod formats;
pub mod help;
pub mod http;
pub mod parallel;
pub mod run;
pub mod store;
pub mod usage_log;

pub use error::{Result, ServiceError};
pub use srl_dash_core as core;
