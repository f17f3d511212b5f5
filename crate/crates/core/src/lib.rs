//! Stress-aware selection of tabular-data synthesizers.
//!
//! Profiles a dataset's difficulty signature (skew, cardinality, Zipfian
//! concentration, sample size, correlation density), quantizes it into a
//! requirement vector, and matches it against a calibrated capability
//! registry under a user intent (privacy / fidelity / utility) to produce a
//! ranked, explained recommendation. Ships with the calibration optimizer,
//! the comparison selectors, ranking metrics, data-quality metrics, and a
//! benchmark harness, plus a CLI and a JSON-RPC stdio server.

pub mod baselines;
pub mod bench;
pub mod cache;
pub mod calibrate;
pub mod data;
pub mod dims;
pub mod engine;
mod error;
pub mod metrics;
pub mod registry;
pub mod report;
pub mod rpc;
pub mod stress;
pub mod synthetic;

pub use error::{Error, Result};
