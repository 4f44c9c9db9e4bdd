//! Peripheral wire format, frame assembly and the tabular CSV log.
//!
//! Each of the four peripherals (two crutches, two insoles) sends one JSON
//! object per sample, newline-delimited on a byte transport. Packets are
//! snapped onto a uniform time grid to form [`SensorFrame`]s, which are
//! logged as a 33-column CSV file.

mod assemble;
mod codec;
mod csv_log;

pub use assemble::{assemble_frames, AssemblerConfig, AssemblyStats, FrameAssembler};
pub use codec::{decode_packet, encode_packet, fmt6, quantize6};
pub use csv_log::{csv_header, read_csv, write_csv, CSV_COLUMNS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orientation;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("malformed packet: {0}")]
    MalformedPacket(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("payload kind does not match device {0}")]
    KindMismatch(DeviceId),
    #[error("no packets in any stream")]
    EmptyInput,
    #[error("invalid assembly parameter: {0}")]
    BadConfig(String),
    #[error("CSV header does not match the column contract: {0}")]
    HeaderMismatch(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    RowArity { line: u64, expected: usize, found: usize },
    #[error("line {line}, column {column}: cannot parse {value:?}")]
    NumericParse { line: u64, column: String, value: String },
    #[error("sink failure: {0}")]
    SinkFailure(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceId {
    CrutchLeft,
    CrutchRight,
    InsoleLeft,
    InsoleRight,
}

impl DeviceId {
    pub const ALL: [DeviceId; 4] = [DeviceId::CrutchLeft, DeviceId::CrutchRight, DeviceId::InsoleLeft, DeviceId::InsoleRight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            DeviceId::CrutchLeft => "crutch_left",
            DeviceId::CrutchRight => "crutch_right",
            DeviceId::InsoleLeft => "insole_left",
            DeviceId::InsoleRight => "insole_right",
        }
    }

    pub fn is_crutch(self) -> bool {
        matches!(self, DeviceId::CrutchLeft | DeviceId::CrutchRight)
    }
}

impl std::fmt::Display for DeviceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Orientation quaternion `[w, x, y, z]` and acceleration (m/s²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub quat: [f64; 4],
    pub accel: [f64; 3],
}

impl ImuSample {
    pub const QUAT_TOLERANCE: f64 = 1e-5;

    pub fn identity() -> Self {
        Self { quat: orientation::identity(), accel: [0.0; 3] }
    }

    /// `[roll, pitch, yaw]` in degrees, Z-Y-X convention.
    pub fn euler_deg(&self) -> [f64; 3] {
        orientation::to_euler_deg(&self.quat)
    }

    pub fn from_euler_deg(euler: [f64; 3], accel: [f64; 3]) -> Self {
        Self { quat: orientation::from_euler_deg(euler), accel }
    }

    pub fn is_unit(&self) -> bool {
        (orientation::norm(&self.quat) - 1.0).abs() <= Self::QUAT_TOLERANCE
    }
}

pub const LOAD_RAW_MIN: i32 = -(1 << 23);
pub const LOAD_RAW_MAX: i32 = (1 << 23) - 1;
pub const FSR_RAW_MAX: u16 = 4095;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    /// Signed 24-bit load-cell count, plus the calibrated force once known.
    Crutch { load_raw: i32, force_n: Option<f64> },
    /// 12-bit FSR counts `[heel, first metatarsal, fifth metatarsal]`.
    Insole { fsr_raw: [u16; 3] },
}

impl Payload {
    pub fn is_crutch(&self) -> bool {
        matches!(self, Payload::Crutch { .. })
    }

    pub fn load_raw(&self) -> Option<i32> {
        match self {
            Payload::Crutch { load_raw, .. } => Some(*load_raw),
            Payload::Insole { .. } => None,
        }
    }

    pub fn fsr_raw(&self) -> Option<[u16; 3]> {
        match self {
            Payload::Insole { fsr_raw } => Some(*fsr_raw),
            Payload::Crutch { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorPacket {
    pub device: DeviceId,
    pub seq: u64,
    /// Milliseconds since the trial trigger.
    pub t_ms: f64,
    pub imu: ImuSample,
    pub payload: Payload,
}

impl SensorPacket {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.device.is_crutch() != self.payload.is_crutch() {
            return Err(ProtocolError::KindMismatch(self.device));
        }
        if !(self.t_ms >= 0.0) || !self.t_ms.is_finite() {
            return Err(ProtocolError::SchemaViolation(format!("t_ms = {}", self.t_ms)));
        }
        if !self.imu.is_unit() {
            return Err(ProtocolError::SchemaViolation(format!("quaternion {:?} is not unit", self.imu.quat)));
        }
        if self.imu.accel.iter().any(|a| !a.is_finite()) {
            return Err(ProtocolError::SchemaViolation("non-finite acceleration".into()));
        }
        match self.payload {
            Payload::Crutch { load_raw, force_n } => {
                if !(LOAD_RAW_MIN..=LOAD_RAW_MAX).contains(&load_raw) {
                    return Err(ProtocolError::SchemaViolation(format!("load_raw {load_raw} exceeds 24 bits")));
                }
                if force_n.is_some_and(|f| !f.is_finite()) {
                    return Err(ProtocolError::SchemaViolation("non-finite force_n".into()));
                }
            }
            Payload::Insole { fsr_raw } => {
                if let Some(v) = fsr_raw.iter().find(|v| **v > FSR_RAW_MAX) {
                    return Err(ProtocolError::SchemaViolation(format!("fsr_raw {v} exceeds 12 bits")));
                }
            }
        }
        Ok(())
    }

    /// Round every real-valued field to the six decimals the wire carries.
    pub fn quantized(mut self) -> Self {
        self.t_ms = quantize6(self.t_ms);
        self.imu.quat = self.imu.quat.map(quantize6);
        self.imu.accel = self.imu.accel.map(quantize6);
        if let Payload::Crutch { force_n: Some(f), .. } = &mut self.payload {
            *f = quantize6(*f);
        }
        self
    }

    pub fn reading(&self) -> Reading {
        Reading { imu: self.imu, payload: self.payload }
    }
}

/// One device's contribution to a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub imu: ImuSample,
    pub payload: Payload,
}

/// Set of devices missing from a frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GapMask(pub u8);

impl GapMask {
    pub fn contains(self, d: DeviceId) -> bool {
        self.0 & (1 << d.index()) != 0
    }

    pub fn insert(&mut self, d: DeviceId) {
        self.0 |= 1 << d.index();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = DeviceId> {
        DeviceId::ALL.into_iter().filter(move |d| self.contains(*d))
    }
}

/// A time-aligned snapshot of the four peripherals. Empty slots are gaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub frame_index: u64,
    pub t_ms: f64,
    pub slots: [Option<Reading>; 4],
}

impl SensorFrame {
    pub fn slot(&self, d: DeviceId) -> Option<&Reading> {
        self.slots[d.index()].as_ref()
    }

    pub fn gap_mask(&self) -> GapMask {
        let mut m = GapMask::default();
        for d in DeviceId::ALL {
            if self.slots[d.index()].is_none() {
                m.insert(d);
            }
        }
        m
    }

    pub fn is_complete(&self) -> bool {
        self.slots.iter().all(Option::is_some)
    }

    /// Both insoles' counts in fuzzy sensor order `[LH, L5M, L1M, RH, R5M, R1M]`,
    /// or `None` if either insole is missing.
    pub fn fsr_six(&self) -> Option<[f64; 6]> {
        let l = self.slot(DeviceId::InsoleLeft)?.payload.fsr_raw()?;
        let r = self.slot(DeviceId::InsoleRight)?.payload.fsr_raw()?;
        Some([l[0], l[2], l[1], r[0], r[2], r[1]].map(f64::from))
    }
}

/// Grid instant `i` at `rate_hz`, in milliseconds, at wire precision.
pub fn grid_time_ms(i: u64, rate_hz: f64) -> f64 {
    quantize6(i as f64 * 1000.0 / rate_hz)
}

/// Shift every timestamp by `offset_ms`, keeping frame order.
pub fn apply_trigger_offset(frames: &[SensorFrame], offset_ms: f64) -> Vec<SensorFrame> {
    frames.iter().map(|f| SensorFrame { t_ms: f.t_ms + offset_ms, ..*f }).collect()
}
