use serde::{Deserialize, Serialize};

use super::BiomechError;
use crate::scalar::Real;

/// Minimum summed insole reading (counts) for a valid centre of pressure.
pub const DEFAULT_COP_EPSILON: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InsoleSize {
    Small,
    Medium,
    Large,
}

/// Sensor coordinates in the insole frame (mm), ordered
/// `[heel, first metatarsal, fifth metatarsal]`. `y` points anteriorly from
/// the back of the heel, `x` laterally (towards the fifth metatarsal).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsoleGeometry<T = f64> {
    pub size_label: InsoleSize,
    pub y: [T; 3],
    pub x: [T; 3],
}

impl<T: Real> InsoleGeometry<T> {
    /// Placeholder geometry per size; calibrate against the actual insoles.
    pub fn preset(size: InsoleSize) -> Self {
        let (y_m1, y_m5, half_width) = match size {
            InsoleSize::Small => (165.0, 160.0, 22.0),
            InsoleSize::Medium => (175.0, 168.0, 25.0),
            InsoleSize::Large => (185.0, 178.0, 28.0),
        };
        Self {
            size_label: size,
            y: [T::lit(30.0), T::lit(y_m1), T::lit(y_m5)],
            x: [T::zero(), T::lit(-half_width), T::lit(half_width)],
        }
    }

    pub fn validate(&self) -> Result<(), BiomechError> {
        if !(self.y[1] > self.y[0] && self.y[2] > self.y[0]) {
            return Err(BiomechError::BadConfig("metatarsal sensors must lie anterior to the heel".into()));
        }
        if self.y.iter().chain(&self.x).any(|v| !v.is_finite()) {
            return Err(BiomechError::BadConfig("non-finite sensor coordinate".into()));
        }
        Ok(())
    }
}

impl<T: Real> Default for InsoleGeometry<T> {
    fn default() -> Self {
        Self::preset(InsoleSize::Medium)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopSample<T = f64> {
    pub y_cop: T,
    pub x_cop: T,
    pub f_total: T,
    /// `false` when the summed reading is below the contact epsilon; the
    /// coordinates are then zero.
    pub valid: bool,
}

/// Force-weighted mean of the sensor coordinates, from readings
/// `[heel, m1, m5]`.
pub fn cop<T: Real>(fsr: [T; 3], geom: &InsoleGeometry<T>, contact_epsilon: T) -> CopSample<T> {
    let f_total = fsr[0] + fsr[1] + fsr[2];
    if !(f_total >= contact_epsilon) || f_total <= T::zero() {
        return CopSample { y_cop: T::zero(), x_cop: T::zero(), f_total, valid: false };
    }
    let w = |c: &[T; 3]| (c[0] * fsr[0] + c[1] * fsr[1] + c[2] * fsr[2]) / f_total;
    CopSample { y_cop: w(&geom.y), x_cop: w(&geom.x), f_total, valid: true }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heel_only_and_uniform() {
        let g = InsoleGeometry::<f64>::default();
        assert_eq!(cop([900.0, 0.0, 0.0], &g, 40.0).y_cop, g.y[0]);
        let c = cop([100.0, 100.0, 100.0], &g, 40.0);
        assert!((c.y_cop - (g.y[0] + g.y[1] + g.y[2]) / 3.0).abs() < 1e-12);
        assert!(c.x_cop.abs() < 1e-12);
    }

    #[test]
    fn hand_evaluated_case() {
        let g = InsoleGeometry { size_label: InsoleSize::Medium, y: [30.0, 180.0, 160.0], x: [0.0; 3] };
        assert_eq!(cop([2.0, 1.0, 1.0], &g, 0.0).y_cop, 100.0);
    }

    #[test]
    fn below_epsilon_is_invalid() {
        let g = InsoleGeometry::<f64>::default();
        let c = cop([10.0, 10.0, 10.0], &g, 40.0);
        assert!(!c.valid);
        assert_eq!(c.f_total, 30.0);
        assert!(!cop([0.0; 3], &g, 0.0).valid);
    }

    #[test]
    fn presets_are_valid() {
        for s in [InsoleSize::Small, InsoleSize::Medium, InsoleSize::Large] {
            InsoleGeometry::<f64>::preset(s).validate().unwrap();
        }
        let bad = InsoleGeometry { size_label: InsoleSize::Small, y: [200.0, 180.0, 160.0], x: [0.0; 3] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn f32_instantiation() {
        let g = InsoleGeometry::<f32>::default();
        let c = cop([1.0f32, 1.0, 0.0], &g, 0.0);
        assert!((c.y_cop - 102.5).abs() < 1e-4);
    }
}
