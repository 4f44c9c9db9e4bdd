//! Synthetic labelled trials.
//!
//! Each gait phase loads the insole sensors according to its rule-table
//! pattern (`High` loaded, `Low` unloaded), with raised-cosine ramps at phase
//! boundaries: an unloading sensor ramps down before the boundary, a loading
//! sensor ramps up after it. Heel sensors carry an impact peak centred on the
//! heel strike followed by a decaying stance plateau. Crutch load peaks in
//! the contralateral stance while the shaft swings through the vertical.
//!
//! The trial starts `lead_in_s` before the first right heel strike.

mod generate;
mod report;
mod transport;

pub use generate::{generate_trial, sample_truth, LabeledTrial, TruthSeries};
pub use report::{label_rows, read_labels_csv, truth_report, write_labels_csv, LabelRow, TruthReport};
pub use transport::{emit_packets, TransportModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::biomech::{InsoleGeometry, LoadCalibration};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("bad profile: {0}")]
    BadProfile(String),
    #[error("labels log: {0}")]
    Csv(#[from] csv::Error),
    #[error("labels log line {line}: {msg}")]
    LabelParse { line: u64, msg: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaitProfile {
    /// Duration of one full gait cycle.
    pub step_duration_s: f64,
    pub n_strides: usize,
    /// Share of the cycle spent in each phase, in rule-table row order.
    pub phase_fractions: [f64; 8],
    /// Full-load FSR reading before the saturation ceiling (counts).
    pub fsr_amplitude: f64,
    pub crutch_peak_n: f64,
    /// Crutch load outside its support hump, as a fraction of the peak.
    pub crutch_baseline_frac: f64,
    /// Anteroposterior shaft swing amplitude about the vertical.
    pub crutch_inclination_deg: f64,
    /// Constant mediolateral shaft tilt.
    pub crutch_ml_tilt_deg: f64,
    /// Cycle fraction at which the left crutch load peaks; the right crutch
    /// peaks half a cycle later.
    pub crutch_peak_phase: f64,
    pub rate_hz: f64,
    pub ramp_ms: f64,
    pub lead_in_s: f64,
    pub heel_bump_half_width_ms: f64,
    /// Heel impact peak relative to the full loaded level.
    pub heel_bump_gain: f64,
    /// Heel stance plateau relative to the full loaded level.
    pub heel_plateau: f64,
    /// Fractional decay of the heel plateau over its stance.
    pub heel_decay: f64,
    /// Peak forward acceleration of an insole in swing (m/s²).
    pub swing_accel_peak: f64,
    pub swing_pitch_deg: f64,
    pub geometry: InsoleGeometry,
    pub load_calibration: LoadCalibration,
}

impl Default for GaitProfile {
    fn default() -> Self {
        Self {
            step_duration_s: 3.33,
            n_strides: 10,
            phase_fractions: [0.125; 8],
            fsr_amplitude: 4095.0,
            crutch_peak_n: 300.0,
            crutch_baseline_frac: 0.2,
            crutch_inclination_deg: 3.6,
            crutch_ml_tilt_deg: 1.2,
            crutch_peak_phase: 0.25,
            rate_hz: 130.0,
            ramp_ms: 60.0,
            lead_in_s: 0.05,
            heel_bump_half_width_ms: 35.0,
            heel_bump_gain: 1.0,
            heel_plateau: 0.4,
            heel_decay: 0.5,
            swing_accel_peak: 2.5,
            swing_pitch_deg: 10.0,
            geometry: InsoleGeometry::default(),
            load_calibration: LoadCalibration::default(),
        }
    }
}

impl GaitProfile {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::BadProfile(m));
        if !(self.step_duration_s > 0.0) {
            return bad(format!("step_duration_s = {}", self.step_duration_s));
        }
        if self.phase_fractions.iter().any(|f| !(*f >= 0.0)) {
            return bad("phase_fractions must be non-negative".into());
        }
        let sum: f64 = self.phase_fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("phase_fractions sum to {sum}, not 1"));
        }
        if !(self.rate_hz > 0.0 && self.rate_hz <= 1000.0) {
            return bad(format!("rate_hz = {} outside (0, 1000]", self.rate_hz));
        }
        if !(self.fsr_amplitude > 0.0) {
            return bad(format!("fsr_amplitude = {}", self.fsr_amplitude));
        }
        if !(self.crutch_peak_n >= 0.0) || !(0.0..=1.0).contains(&self.crutch_baseline_frac) {
            return bad("crutch load must be non-negative with baseline_frac in [0, 1]".into());
        }
        if !(self.ramp_ms >= 0.0) || !(self.lead_in_s >= 0.0) || !(self.heel_bump_half_width_ms >= 0.0) {
            return bad("ramp_ms, lead_in_s and heel_bump_half_width_ms must be non-negative".into());
        }
        for (name, v) in [
            ("crutch_inclination_deg", self.crutch_inclination_deg),
            ("crutch_ml_tilt_deg", self.crutch_ml_tilt_deg),
            ("crutch_peak_phase", self.crutch_peak_phase),
            ("heel_bump_gain", self.heel_bump_gain),
            ("heel_plateau", self.heel_plateau),
            ("heel_decay", self.heel_decay),
            ("swing_accel_peak", self.swing_accel_peak),
            ("swing_pitch_deg", self.swing_pitch_deg),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} = {v}"));
            }
        }
        self.geometry.validate().map_err(|e| SimError::BadProfile(e.to_string()))?;
        self.load_calibration.validate().map_err(|e| SimError::BadProfile(e.to_string()))?;
        Ok(())
    }

    /// Trial length: lead-in plus `n_strides` full cycles.
    pub fn duration_s(&self) -> f64 {
        self.lead_in_s + self.n_strides as f64 * self.step_duration_s
    }

    pub fn n_frames(&self) -> usize {
        let n = (self.duration_s() * self.rate_hz - 1e-9).ceil();
        n.max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Gaussian noise on FSR readings (counts).
    pub fsr_noise_sd: f64,
    /// Fraction of the 12-bit full scale the FSRs actually reach.
    pub saturation_ceiling_frac: f64,
    pub imu_angle_noise_deg: f64,
    pub accel_noise_sd: f64,
    pub load_noise_n: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            fsr_noise_sd: 0.0,
            saturation_ceiling_frac: 0.8,
            imu_angle_noise_deg: 0.0,
            accel_noise_sd: 0.0,
            load_noise_n: 0.0,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.saturation_ceiling_frac > 0.0 && self.saturation_ceiling_frac <= 1.0) {
            return Err(SimError::BadProfile(format!(
                "saturation_ceiling_frac = {} outside (0, 1]",
                self.saturation_ceiling_frac
            )));
        }
        for (name, v) in [
            ("fsr_noise_sd", self.fsr_noise_sd),
            ("imu_angle_noise_deg", self.imu_angle_noise_deg),
            ("accel_noise_sd", self.accel_noise_sd),
            ("load_noise_n", self.load_noise_n),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(SimError::BadProfile(format!("{name} = {v}")));
            }
        }
        Ok(())
    }

    /// Largest FSR count the model emits.
    pub fn fsr_ceiling(&self) -> u16 {
        (self.saturation_ceiling_frac * 4095.0).round() as u16
    }
}
