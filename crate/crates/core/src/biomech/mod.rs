//! Biomechanical metrics from the insoles and crutches: centre of pressure,
//! crutch force calibration and world-frame decomposition, and gait events.

mod cop;
mod events;
mod grf;

pub use cop::{cop, CopSample, InsoleGeometry, InsoleSize, DEFAULT_COP_EPSILON};
pub use events::{
    detect_heel_strikes, detect_toe_offs, read_events_csv, stride_durations, write_events_csv, EventConfig,
    EventKind, GaitEvent, StrideDurations,
};
pub use grf::{calibrate_load, decompose_grf, decompose_grf_with_axis, GrfVector, LoadCalibration, SHAFT_AXIS};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BiomechError {
    #[error("empty signal")]
    EmptySignal,
    #[error("quaternion norm {0} is not 1")]
    NonUnitQuaternion(f64),
    #[error("series lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("event log: {0}")]
    Csv(#[from] csv::Error),
    #[error("event log line {line}: {msg}")]
    EventParse { line: u64, msg: String },
}
