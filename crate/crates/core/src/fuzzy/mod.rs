//! Fuzzy gait-phase estimation from the six insole FSRs.
//!
//! Readings are normalised by their sum, mapped through a sigmoid membership
//! function into `High`/`Low` grades, and combined with `AND = min` over a
//! table of eight rules, one per gait phase. [`classify`] adds the crisp
//! selection step (argmax with k-frame hysteresis).
//!
//! Sensor order everywhere in this module is
//! `[LH, L5M, L1M, RH, R5M, R1M]`: heel, fifth metatarsal, first metatarsal,
//! left foot then right foot.

mod classifier;
mod membership;
mod rules;

pub use classifier::{classify, ClassifierConfig, PhaseClassifier, PhaseEstimate, SmoothingState};
pub use membership::{grades, membership, normalize, LinguisticGrades, MembershipParams, NormalizedFsr};
pub use rules::{evaluate_rules, mirror_rules, Level, PhaseGrades, Rule, RuleTable};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Labels of the six insole sensors in module order.
pub const SENSOR_LABELS: [&str; 6] = ["LH", "L5M", "L1M", "RH", "R5M", "R1M"];

/// Contact threshold on the raw sum: 1% of one 12-bit sensor's full scale.
pub const DEFAULT_CONTACT_EPSILON: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("negative FSR reading {value} at {sensor}")]
    NegativeReading { sensor: &'static str, value: f64 },
    #[error("no foot contact; grades undefined")]
    NoContact,
    #[error("invalid rule table: {0}")]
    InvalidTable(String),
    #[error("invalid classifier config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    #[serde(alias = "left")]
    Left,
    #[serde(alias = "right")]
    Right,
}

impl Side {
    pub fn other(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Gait phases in rule-table row order, plus `Unknown` for warm-up and
/// airborne frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GaitPhase {
    HeelStrike,
    LoadingResponse,
    MidStance,
    TerminalStance,
    PreSwing,
    InitialSwing,
    MidSwing,
    TerminalSwing,
    Unknown,
}

impl GaitPhase {
    /// The eight estimable phases in row order.
    pub const ALL: [GaitPhase; 8] = [
        GaitPhase::HeelStrike,
        GaitPhase::LoadingResponse,
        GaitPhase::MidStance,
        GaitPhase::TerminalStance,
        GaitPhase::PreSwing,
        GaitPhase::InitialSwing,
        GaitPhase::MidSwing,
        GaitPhase::TerminalSwing,
    ];

    /// Row index, `None` for `Unknown`.
    pub fn index(self) -> Option<usize> {
        GaitPhase::ALL.iter().position(|p| *p == self)
    }

    pub fn from_index(i: usize) -> Option<Self> {
        GaitPhase::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            GaitPhase::HeelStrike => "HeelStrike",
            GaitPhase::LoadingResponse => "LoadingResponse",
            GaitPhase::MidStance => "MidStance",
            GaitPhase::TerminalStance => "TerminalStance",
            GaitPhase::PreSwing => "PreSwing",
            GaitPhase::InitialSwing => "InitialSwing",
            GaitPhase::MidSwing => "MidSwing",
            GaitPhase::TerminalSwing => "TerminalSwing",
            GaitPhase::Unknown => "Unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        GaitPhase::ALL
            .iter()
            .copied()
            .chain(std::iter::once(GaitPhase::Unknown))
            .find(|p| p.name() == s)
    }
}

impl std::fmt::Display for GaitPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
