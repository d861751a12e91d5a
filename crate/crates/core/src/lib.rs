//! Psychometric evaluation toolkit: item analysis, exploratory factor
//! analysis, score standardization, reliability and validity coefficients,
//! differential item functioning, and a seeded data simulator.
//!
//! The crate is organized around two data types. [`ResponseMatrix`] holds
//! raw, possibly incomplete responses straight from a CSV file.
//! [`ScoredTest`] holds complete, keyed/reversed scores and participant
//! totals; every analysis consumes it. All computations are pure and
//! deterministic; anything stochastic (the simulator, parallel analysis)
//! takes an explicit seed.

pub mod data;
pub mod efa;
pub mod error;
pub mod fairness;
pub mod item;
pub mod reliability;
pub mod simulate;
pub mod standardize;
pub mod stats;
pub mod validity;

pub use data::{
    listwise_delete, load_csv, load_csv_reader, score, ResponseMatrix, ScaleSpec, ScoredTest,
    TestType,
};
pub use error::{Error, ErrorKind, Result};
