//! Caption diagnostics for multi-style captioners.
//!
//! The pipeline is `corpus` → `metrics` → `triage` → `xray`: load records,
//! score generations, pick the low performers and the best styles, then walk
//! each low performer through the two-view decision tree to name a likely
//! error source. `fusion` is a small two-branch attention decoder that
//! produces synthetic corpora for the rest of the pipeline.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod triage;
pub mod xray;

pub use error::{Error, Result};
