//! Gait analysis and high-level control for exoskeleton users instrumented
//! with load-cell crutches and three-sensor FSR insoles.
//!
//! The pipeline runs from newline-delimited JSON packets through frame
//! assembly and the tabular CSV log, into fuzzy gait-phase estimation,
//! biomechanical metrics and the step controllers. [`sim`] produces labelled
//! trials that serve as ground truth for every stage.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biomech;
pub mod control;
pub mod dsp;
pub mod fuzzy;
pub mod orientation;
pub mod pipeline;
pub mod protocol;
pub mod scalar;
pub mod series;
pub mod sim;

pub use scalar::Real;

pub type CopSample32 = biomech::CopSample<f32>;
pub type CopSample64 = biomech::CopSample<f64>;
pub type GrfVector32 = biomech::GrfVector<f32>;
pub type GrfVector64 = biomech::GrfVector<f64>;
pub type InsoleGeometry32 = biomech::InsoleGeometry<f32>;
pub type InsoleGeometry64 = biomech::InsoleGeometry<f64>;
pub type MembershipParams32 = fuzzy::MembershipParams<f32>;
pub type MembershipParams64 = fuzzy::MembershipParams<f64>;
pub type PhaseEstimate32 = fuzzy::PhaseEstimate<f32>;
pub type PhaseEstimate64 = fuzzy::PhaseEstimate<f64>;
pub type Sos32 = dsp::Sos<f32>;
pub type Sos64 = dsp::Sos<f64>;
