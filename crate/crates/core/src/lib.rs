//! Simulator for high-dimensional Bell tests with inefficient detectors.
//!
//! The crate models a bipartite measurement scenario on the maximally
//! entangled state, evaluates the associated Bell expression exactly and by
//! stratified sampling, searches for the largest Hamming-distance-avoiding
//! subsets that bound local-variable models, decides classical simulability
//! by linear programming, and maps detector-inefficiency models to and from
//! classical communication protocols.

pub mod avoidance;
pub mod bell;
pub mod bits;
pub mod bounds;
pub mod error;
pub mod feasibility;
pub mod guessing;
pub mod lhv;
pub mod numeric;
pub mod protocol;
pub mod report;
pub mod sampling;
pub mod scenario;
pub mod simplex;

pub use bits::{hamming, BitString};
pub use error::{Error, Result};
pub use scenario::{EfficiencyModel, JointTable, OutcomeIndex, Scenario};
