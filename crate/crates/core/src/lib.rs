//! Partition a neural-network safety requirement's input box into
//! sub-requirements, propose candidate unsafe sub-requirements with a
//! real-valued negative selection algorithm trained on the known-safe
//! ones, and validate candidates with a complete verifier for small ReLU
//! networks.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix the scalar to `f64`, which is what the file formats and the
//! experiment harness use.

// Negated comparisons are used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod model;
pub mod nsa;
pub mod scalar;
pub mod verifier;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Version tag written into every JSON file this crate produces.
pub const SCHEMA_VERSION: u32 = 1;

pub type Network = model::Network<f64>;
pub type Network32 = model::Network<f32>;
pub type Interval = geometry::Interval<f64>;
pub type Interval32 = geometry::Interval<f32>;
pub type HyperBox = geometry::HyperBox<f64>;
pub type HyperBox32 = geometry::HyperBox<f32>;
/// One cell of a partitioned requirement.
pub type SubRequirement = geometry::HyperBox<f64>;
pub type OutputCondition = verifier::OutputCondition<f64>;
pub type LinearConstraint = verifier::LinearConstraint<f64>;
pub type Verdict = verifier::Verdict<f64>;
pub type VerificationQuery<'a> = verifier::VerificationQuery<'a, f64>;
pub type DetectorSet = nsa::DetectorSet<f64>;
