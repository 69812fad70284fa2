//! Core of the self-regulated-learning dashboard: clickstream sessionization,
//! weekly feature extraction for the five SRL dimensions, the two-stage
//! clustering pipeline (per-dimension spectral clustering on DTW distances,
//! then k-modes over the dimension labels), dashboard content generation and
//! the dashboard's own usage analytics.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, storage, the
//! HTTP service and the CLI live in the `srl-dash` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cluster;
pub mod error;
pub mod features;
pub mod ingest;
pub mod insights;
pub mod pipeline;
pub mod synth;
pub mod usage;

pub use error::{Error, Result};

/// UTC instant with second resolution.
pub type Timestamp = chrono::DateTime<chrono::Utc>;

/// Opaque student identifier.
pub type StudentId = alloc::string::String;
