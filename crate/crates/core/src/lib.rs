//! Leakage auditing for data representations.
//!
//! The crate covers the full audit pipeline: fixed-point field arithmetic,
//! dataset ingestion and commitment, histogram mutual-information
//! estimation, power-iteration PCA, circuit-friendly cryptography, an R1CS
//! compiler for the audit computation, and a simulated auditing contract
//! with sender and receiver roles.

pub mod circuit;
pub mod crypto;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod field;
pub mod fixed;
pub mod pca;
pub mod protocol;

pub use error::{Error, Result};
pub use field::Fe;
pub use fixed::FixedPoint;
