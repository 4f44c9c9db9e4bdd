use serde::{Deserialize, Serialize};

use super::BiomechError;
use crate::orientation::{self, Quat, Vec3};
use crate::scalar::Real;

/// Crutch shaft direction in the sensor frame.
pub const SHAFT_AXIS: [f64; 3] = [0.0, 0.0, 1.0];

/// Quaternions are accepted within this distance of unit norm and
/// renormalised; wire quantisation alone reaches about 1e-6.
const QUAT_TOLERANCE: f64 = 1e-5;

/// Linear load-cell calibration: `force = (raw - tare) * gain`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadCalibration {
    pub tare: f64,
    /// Newtons per count.
    pub gain: f64,
}

impl Default for LoadCalibration {
    fn default() -> Self {
        Self { tare: 0.0, gain: 0.001 }
    }
}

impl LoadCalibration {
    pub fn validate(&self) -> Result<(), BiomechError> {
        if !(self.gain > 0.0) || !self.tare.is_finite() {
            return Err(BiomechError::BadConfig(format!("calibration {self:?}: gain must be positive")));
        }
        Ok(())
    }

    /// Nearest raw count for a force.
    pub fn raw_for(&self, force_n: f64) -> i64 {
        (force_n / self.gain + self.tare).round() as i64
    }
}

pub fn calibrate_load(raw: i64, cal: &LoadCalibration) -> f64 {
    (raw as f64 - cal.tare) * cal.gain
}

/// Crutch ground-reaction force in the world frame (x anteroposterior,
/// y mediolateral, z vertical).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrfVector<T = f64> {
    pub f_axial: T,
    pub f_world: Vec3<T>,
    /// Angle between the shaft and the world vertical.
    pub inclination_deg: T,
}

pub fn decompose_grf<T: Real>(f_axial: T, quat: &Quat<T>) -> Result<GrfVector<T>, BiomechError> {
    decompose_grf_with_axis(f_axial, quat, SHAFT_AXIS.map(T::lit))
}

/// Decompose an axial force along `axis` (sensor frame, unit length).
pub fn decompose_grf_with_axis<T: Real>(
    f_axial: T,
    quat: &Quat<T>,
    axis: Vec3<T>,
) -> Result<GrfVector<T>, BiomechError> {
    let n = orientation::norm(quat);
    if !((n - T::one()).abs() <= T::lit(QUAT_TOLERANCE)) {
        return Err(BiomechError::NonUnitQuaternion(n.as_f64()));
    }
    let q = quat.map(|c| c / n);
    let a = orientation::rotate(&q, axis);
    let cos = a[2].max(-T::one()).min(T::one());
    Ok(GrfVector { f_axial, f_world: a.map(|c| c * f_axial), inclination_deg: cos.acos().to_degrees() })
}
