//! Signal conditioning and agreement statistics.
//!
//! Butterworth low-pass design (analog prototype + bilinear transform,
//! realised as second-order sections), forward-backward application,
//! decimation onto a coarser grid, and the paired-comparison statistics used
//! to validate sensor channels against a reference.

mod filter;
mod stats;
mod wilcoxon;

pub use filter::{butterworth_lowpass, decimate, zero_phase_filter, FilterSpec, Sos};
pub use stats::{agreement, bland_altman, mean, median_iqr, pearson, quantile, rmse, AgreementReport, BlandAltman};
pub use wilcoxon::{wilcoxon_signed_rank, wilcoxon_signed_rank_with, PValueMethod, WilcoxonResult, EXACT_MAX_N};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DspError {
    #[error("signal of length {len} is too short (need more than {min} samples)")]
    TooShort { len: usize, min: usize },
    #[error("invalid filter spec: {0}")]
    BadSpec(String),
    #[error("invalid rate pair: from {from} Hz to {to} Hz")]
    BadRates { from: f64, to: f64 },
    #[error("length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("empty input")]
    Empty,
    #[error("constant input; correlation undefined")]
    ConstantInput,
    #[error("all paired differences are zero")]
    AllZeroDiffs,
}
