//! Statistical and constructive experiments at desk scale.

pub mod stats;
