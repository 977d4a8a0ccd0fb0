//! Combinatorics and analysis of the postorder rearrangement of the Haar
//! system on finite dyadic trees: ordinal maps, Carleson constants,
//! order-interval geometry, BMO/H^p norms with operator-norm certificates,
//! a streaming Haar wavelet transform, and an exhaustive verification
//! harness.

pub mod dwt;
pub mod dyadic;
pub mod error;
pub mod geometry;
pub mod norms;
pub mod order;
pub mod rational;
pub mod verify;

pub use dyadic::{carleson, enumerate, lowermost_level, subtree, Depth, DyadicInterval, IntervalSet};
pub use error::{Error, Result};
pub use order::{sigma, tau, Rearrangement, RearrangementKind};
pub use rational::DyadicRational;
