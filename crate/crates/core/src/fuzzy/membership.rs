use serde::{Deserialize, Serialize};

use super::{FuzzyError, SENSOR_LABELS};
use crate::scalar::Real;

/// Sigmoid membership parameters: slope `s` and threshold `f0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipParams<T> {
    pub s: T,
    pub f0: T,
}

impl<T: Real> MembershipParams<T> {
    pub fn new(s: T, f0: T) -> Result<Self, FuzzyError> {
        if !(s > T::zero()) || !s.is_finite() {
            return Err(FuzzyError::InvalidConfig(format!("slope s = {s} must be positive")));
        }
        if !(f0.is_finite()) {
            return Err(FuzzyError::InvalidConfig(format!("threshold f0 = {f0}")));
        }
        Ok(Self { s, f0 })
    }

    /// Parameters that act on `x` exactly as `self` acts on `x * scale`.
    pub fn rescaled(&self, scale: T) -> Self {
        Self { s: self.s * scale, f0: self.f0 / scale }
    }
}

impl<T: Real> Default for MembershipParams<T> {
    /// `s = 0.15`, `f0 = 0.45`.
    fn default() -> Self {
        Self { s: T::lit(0.15), f0: T::lit(0.45) }
    }
}

/// `1 / (1 + exp(-s (f - f0)))`.
#[inline]
pub fn membership<T: Real>(f_star: T, params: &MembershipParams<T>) -> T {
    T::one() / (T::one() + (-params.s * (f_star - params.f0)).exp())
}

/// Sum-normalised insole readings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedFsr<T> {
    pub values: [T; 6],
    /// Both feet airborne: the raw sum fell below the contact epsilon.
    pub no_contact: bool,
}

/// Divide each reading by the sum of all six. Sums below `contact_epsilon`
/// are flagged `no_contact` with all values zero.
pub fn normalize<T: Real>(raw: &[T; 6], contact_epsilon: T) -> Result<NormalizedFsr<T>, FuzzyError> {
    for (i, &v) in raw.iter().enumerate() {
        if v < T::zero() || v.is_nan() {
            return Err(FuzzyError::NegativeReading { sensor: SENSOR_LABELS[i], value: v.as_f64() });
        }
    }
    let total = raw.iter().fold(T::zero(), |s, &v| s + v);
    if total < contact_epsilon || total == T::zero() {
        return Ok(NormalizedFsr { values: [T::zero(); 6], no_contact: true });
    }
    Ok(NormalizedFsr { values: raw.map(|v| v / total), no_contact: false })
}

/// `High` and `Low` grades per sensor; `low[i] = 1 - high[i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinguisticGrades<T> {
    pub high: [T; 6],
    pub low: [T; 6],
}

impl<T: Real> LinguisticGrades<T> {
    /// Grades from explicit `High` values.
    pub fn from_high(high: [T; 6]) -> Self {
        Self { high, low: high.map(|h| T::one() - h) }
    }
}

pub fn grades<T: Real>(n: &NormalizedFsr<T>, params: &MembershipParams<T>) -> Result<LinguisticGrades<T>, FuzzyError> {
    if n.no_contact {
        return Err(FuzzyError::NoContact);
    }
    Ok(LinguisticGrades::from_high(n.values.map(|v| membership(v, params))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_reference_points() {
        let p = MembershipParams::<f64>::default();
        assert_eq!(membership(0.45, &p), 0.5);
        // 1 / (1 + e^{-0.0825})
        let expected = 1.0 / (1.0 + (-0.0825f64).exp());
        assert!((membership(1.0, &p) - expected).abs() < 1e-15);
        assert!((membership(1.0, &p) - 0.52061).abs() < 5e-6);
        assert!(membership(1e6, &p) > 1.0 - 1e-12);
        assert!(membership(-1e6, &p) < 1e-12);
    }

    #[test]
    fn membership_is_increasing() {
        let p = MembershipParams::<f64>::default();
        let xs: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.1).collect();
        assert!(xs.windows(2).all(|w| membership(w[0], &p) < membership(w[1], &p)));
    }

    #[test]
    fn rescaled_matches_scaled_input() {
        let p = MembershipParams::<f64>::default();
        let q = p.rescaled(100.0);
        for v in [0.0, 0.0045, 0.2, 0.5, 1.0] {
            assert!((membership(v, &q) - membership(v * 100.0, &p)).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_cases() {
        let n = normalize(&[100.0f64; 6], 40.0).unwrap();
        assert!(n.values.iter().all(|v| (v - 1.0 / 6.0).abs() < 1e-15));
        let n = normalize(&[4095.0, 0.0, 0.0, 0.0, 0.0, 0.0], 40.0).unwrap();
        assert_eq!(n.values, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let n = normalize(&[0.0f64; 6], 40.0).unwrap();
        assert!(n.no_contact && n.values == [0.0; 6]);
        let n = normalize(&[10.0, 10.0, 10.0, 0.0, 0.0, 9.0], 40.0).unwrap();
        assert!(n.no_contact);
        assert!(matches!(
            normalize(&[1.0, -2.0, 0.0, 0.0, 0.0, 0.0], 40.0),
            Err(FuzzyError::NegativeReading { sensor: "L5M", .. })
        ));
    }

    #[test]
    fn grades_cases() {
        let p = MembershipParams::<f64>::default();
        let n = normalize(&[7.0f64; 6], 0.0).unwrap();
        let g = grades(&n, &p).unwrap();
        assert!(g.high.iter().all(|h| *h == g.high[0]));
        assert!(g.high.iter().zip(&g.low).all(|(h, l)| h + l == 1.0));

        let n = normalize(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        let g = grades(&n, &p).unwrap();
        assert!(g.high[1..].iter().all(|h| *h < g.high[0]));
        assert!(g.low[1..].iter().all(|l| *l > g.low[0]));

        let n = NormalizedFsr { values: [0.45, 0.11, 0.11, 0.11, 0.11, 0.11], no_contact: false };
        let g = grades(&n, &p).unwrap();
        assert_eq!((g.high[0], g.low[0]), (0.5, 0.5));

        let airborne = normalize(&[0.0f64; 6], 40.0).unwrap();
        assert_eq!(grades(&airborne, &p), Err(FuzzyError::NoContact));
    }
}
