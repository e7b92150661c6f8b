//! Event-driven simulator for continuum ball-growth infection models
//! ("continuum Richardson" dynamics) with generalized initial configurations:
//! delayed activations and immune regions.
//!
//! The driving randomness is a marked Poisson point process sampled
//! reproducibly over adaptive space-time-strength windows; the dynamics are
//! deterministic replays of that configuration under one of two scanning
//! constructions, which makes coupled comparisons between models on shared
//! randomness exact.
//!
//! Core math is generic over the scalar via [`scalar::Scalar`]; `f64` is the
//! default used by the concrete aliases at the crate root.

pub mod coverage;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod geom;
pub mod pointproc;
pub mod rho;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Concrete `f64` aliases for the main domain types.
pub type Point = geom::Point<f64>;
pub type Ball = geom::Ball<f64>;
pub type Segment = geom::Segment<f64>;
pub type Region = geom::Region<f64>;
pub type Primitive = geom::Primitive<f64>;
pub type CylindricalShell = geom::CylindricalShell<f64>;
pub type RadiusDistribution = rho::RadiusDistribution<f64>;
pub type PoissonPoint = pointproc::PoissonPoint<f64>;
pub type Window = pointproc::Window<f64>;
pub type PointStore = pointproc::PointStore<f64>;
pub type GeneralizedInitialConfig = coverage::GeneralizedInitialConfig<f64>;
pub type ConfigPiece = coverage::ConfigPiece<f64>;
pub type EventLog = coverage::EventLog<f64>;
pub type InfectionStatus = coverage::InfectionStatus<f64>;
pub type RunSpec = dynamics::RunSpec<f64>;
pub type RunResult = dynamics::RunResult<f64>;

/// Single-precision aliases, for callers that trade accuracy for footprint.
pub type Point32 = geom::Point<f32>;
pub type Ball32 = geom::Ball<f32>;
pub type RunSpec32 = dynamics::RunSpec<f32>;
