use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ControlError;
use crate::biomech::GrfVector;
use crate::orientation;
use crate::protocol::{DeviceId, SensorFrame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafetyConfig {
    pub crutch_contact_threshold_n: f64,
    /// Minimum peak forward (sensor x) acceleration of each insole over the
    /// history window (m/s²).
    pub forward_accel_threshold: f64,
    pub crutch_incl_range_deg: [f64; 2],
    pub insole_pitch_range_deg: [f64; 2],
    /// History the forward-motion predicate needs; at least one step.
    pub history_ms: f64,
}

impl Default for SafetyConfig {
    fn default() -> Self {
        Self {
            crutch_contact_threshold_n: 20.0,
            forward_accel_threshold: 1.0,
            crutch_incl_range_deg: [0.0, 45.0],
            insole_pitch_range_deg: [-30.0, 30.0],
            history_ms: 3330.0,
        }
    }
}

impl SafetyConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        let bad = |m: String| Err(ControlError::BadConfig(m));
        for (name, [lo, hi]) in [("crutch_incl_range_deg", self.crutch_incl_range_deg), ("insole_pitch_range_deg", self.insole_pitch_range_deg)] {
            if !(lo < hi) {
                return bad(format!("{name} = [{lo}, {hi}]"));
            }
        }
        if !(self.crutch_contact_threshold_n > 0.0 && self.forward_accel_threshold > 0.0) {
            return bad("safety thresholds must be positive".into());
        }
        if !(self.history_ms > 0.0) || !self.history_ms.is_finite() {
            return bad(format!("history_ms = {}", self.history_ms));
        }
        Ok(())
    }
}

/// Outcome of each safety predicate, `[left, right]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SafetyRecord {
    pub crutch_contact: [bool; 2],
    pub forward_motion: [bool; 2],
    pub crutch_orientation: [bool; 2],
    pub insole_orientation: [bool; 2],
}

impl SafetyRecord {
    pub fn pass(&self) -> bool {
        [self.crutch_contact, self.forward_motion, self.crutch_orientation, self.insole_orientation]
            .iter()
            .flatten()
            .all(|&b| b)
    }
}

/// Recent insole forward accelerations, pruned to the window.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyHistory {
    window_ms: f64,
    samples: VecDeque<(f64, [Option<f64>; 2])>,
}

impl SafetyHistory {
    pub fn new(window_ms: f64) -> Self {
        Self { window_ms, samples: VecDeque::new() }
    }

    pub fn push(&mut self, frame: &SensorFrame) {
        let fwd = [DeviceId::InsoleLeft, DeviceId::InsoleRight].map(|d| frame.slot(d).map(|r| r.imu.accel[0]));
        self.samples.push_back((frame.t_ms, fwd));
        while self.samples.len() > 2 && self.samples[1].0 <= frame.t_ms - self.window_ms {
            self.samples.pop_front();
        }
    }

    pub fn span_ms(&self) -> f64 {
        match (self.samples.front(), self.samples.back()) {
            (Some(a), Some(b)) => b.0 - a.0,
            _ => 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Peak forward acceleration per insole, `None` without samples.
    pub fn peak_forward(&self) -> [Option<f64>; 2] {
        [0, 1].map(|k| self.samples.iter().filter_map(|s| s.1[k]).reduce(f64::max))
    }
}

/// Evaluate every predicate; `pass()` on the record is the conjunction.
/// Missing insole readings fail their predicates.
pub fn safety_check(
    frame: &SensorFrame,
    grf_l: &GrfVector,
    grf_r: &GrfVector,
    history: &SafetyHistory,
    cfg: &SafetyConfig,
) -> Result<SafetyRecord, ControlError> {
    let have_ms = history.span_ms();
    if have_ms + 1e-9 < cfg.history_ms {
        return Err(ControlError::InsufficientHistory { have_ms, need_ms: cfg.history_ms });
    }
    let within = |v: f64, [lo, hi]: [f64; 2]| v >= lo && v <= hi;
    let grf = [grf_l, grf_r];
    let peaks = history.peak_forward();
    let pitch = [DeviceId::InsoleLeft, DeviceId::InsoleRight]
        .map(|d| frame.slot(d).map(|r| orientation::to_euler_deg(&r.imu.quat)[1]));
    Ok(SafetyRecord {
        crutch_contact: [0, 1].map(|k| grf[k].f_axial >= cfg.crutch_contact_threshold_n),
        forward_motion: peaks.map(|p| p.is_some_and(|a| a >= cfg.forward_accel_threshold)),
        crutch_orientation: [0, 1].map(|k| within(grf[k].inclination_deg, cfg.crutch_incl_range_deg)),
        insole_orientation: pitch.map(|p| p.is_some_and(|v| within(v, cfg.insole_pitch_range_deg))),
    })
}
