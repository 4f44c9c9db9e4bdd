use serde::{Deserialize, Serialize};

use super::DspError;
use crate::scalar::Real;

/// Low-pass Butterworth design parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub order: usize,
    pub cutoff_hz: f64,
    pub sample_rate_hz: f64,
}

impl FilterSpec {
    pub const MAX_ORDER: usize = 8;

    pub fn new(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self, DspError> {
        let spec = Self { order, cutoff_hz, sample_rate_hz };
        spec.validate()?;
        Ok(spec)
    }

    /// Default conditioning for force channels (FSR, load cell): order 2, 10 Hz.
    pub fn force_channel(sample_rate_hz: f64) -> Self {
        Self { order: 2, cutoff_hz: 10.0, sample_rate_hz }
    }

    /// Default conditioning for accelerations: order 2, 15 Hz.
    pub fn accel_channel(sample_rate_hz: f64) -> Self {
        Self { order: 2, cutoff_hz: 15.0, sample_rate_hz }
    }

    pub fn validate(&self) -> Result<(), DspError> {
        if !(1..=Self::MAX_ORDER).contains(&self.order) {
            return Err(DspError::BadSpec(format!("order {} outside [1, {}]", self.order, Self::MAX_ORDER)));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(DspError::BadSpec(format!("sample rate {} Hz", self.sample_rate_hz)));
        }
        let nyquist = self.sample_rate_hz / 2.0;
        if !(self.cutoff_hz > 0.0 && self.cutoff_hz < nyquist) {
            return Err(DspError::BadSpec(format!(
                "cutoff {} Hz outside (0, {nyquist})",
                self.cutoff_hz
            )));
        }
        Ok(())
    }
}

/// One second-order section in transposed direct form II.
///
/// `a0` is normalised to 1. First-order sections carry `b2 = a2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sos<T> {
    pub b: [T; 3],
    pub a: [T; 2],
}

impl<T: Real> Sos<T> {
    /// State that makes the section's output equal to a constant input `u`.
    /// Every section designed here has unity DC gain.
    fn steady_state(&self, u: T) -> [T; 2] {
        let z2 = (self.b[2] - self.a[1]) * u;
        let z1 = (self.b[1] - self.a[0]) * u + z2;
        [z1, z2]
    }

    #[inline]
    fn step(&self, z: &mut [T; 2], x: T) -> T {
        let y = self.b[0] * x + z[0];
        z[0] = self.b[1] * x - self.a[0] * y + z[1];
        z[1] = self.b[2] * x - self.a[1] * y;
        y
    }

    pub fn dc_gain(&self) -> T {
        (self.b[0] + self.b[1] + self.b[2]) / (T::one() + self.a[0] + self.a[1])
    }
}

impl FilterSpec {
    /// Second-order sections of the digital low-pass.
    ///
    /// Analog prototype poles `exp(iπ(2k+N-1)/2N)`, cutoff prewarped with
    /// `tan(π fc / fs)`, then mapped through the bilinear transform.
    pub fn sections<T: Real>(&self) -> Result<Vec<Sos<T>>, DspError> {
        self.validate()?;
        let n = self.order;
        let k = T::lit((std::f64::consts::PI * self.cutoff_hz / self.sample_rate_hz).tan());
        let k2 = k * k;
        let two = T::lit(2.0);
        let mut out = Vec::with_capacity(n.div_ceil(2));
        for j in 1..=n / 2 {
            // -2 Re(p_j) for the conjugate pair j
            let theta = std::f64::consts::PI * (2 * j - 1) as f64 / (2 * n) as f64;
            let damp = T::lit(2.0 * theta.sin());
            let norm = T::one() / (T::one() + damp * k + k2);
            let b0 = k2 * norm;
            out.push(Sos {
                b: [b0, two * b0, b0],
                a: [two * (k2 - T::one()) * norm, (T::one() - damp * k + k2) * norm],
            });
        }
        if n % 2 == 1 {
            let norm = T::one() / (T::one() + k);
            let b0 = k * norm;
            out.push(Sos { b: [b0, b0, T::zero()], a: [(k - T::one()) * norm, T::zero()] });
        }
        Ok(out)
    }
}

fn run_cascade<T: Real>(sections: &[Sos<T>], x: &mut [T]) {
    let Some(&x0) = x.first() else { return };
    for s in sections {
        let mut z = s.steady_state(x0);
        for v in x.iter_mut() {
            *v = s.step(&mut z, *v);
        }
    }
}

fn check_len(len: usize, order: usize) -> Result<(), DspError> {
    let min = 3 * order;
    if len <= min {
        return Err(DspError::TooShort { len, min });
    }
    Ok(())
}

/// Single-pass (causal) Butterworth low-pass.
///
/// The section states start at the steady state of the first sample, so a
/// constant signal passes through unchanged from the first output on.
pub fn butterworth_lowpass<T: Real>(x: &[T], spec: &FilterSpec) -> Result<Vec<T>, DspError> {
    let sections = spec.sections::<T>()?;
    check_len(x.len(), spec.order)?;
    let mut y = x.to_vec();
    run_cascade(&sections, &mut y);
    Ok(y)
}

/// Forward-backward application of [`butterworth_lowpass`] with odd
/// extension at both ends. Zero group delay; squared magnitude response.
/// The extension spans roughly four cutoff periods (capped at `len - 1`).
pub fn zero_phase_filter<T: Real>(x: &[T], spec: &FilterSpec) -> Result<Vec<T>, DspError> {
    let sections = spec.sections::<T>()?;
    check_len(x.len(), spec.order)?;
    let n = x.len();
    // long enough for the start-up transient of either pass to die out
    let settle = (4.0 * spec.sample_rate_hz / spec.cutoff_hz).ceil() as usize;
    let pad = (3 * (2 * sections.len() + 1) + settle).min(n - 1);
    let two = T::lit(2.0);
    let (first, last) = (x[0], x[n - 1]);

    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| two * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| two * last - x[n - 1 - i]));

    run_cascade(&sections, &mut ext);
    ext.reverse();
    run_cascade(&sections, &mut ext);
    ext.reverse();
    Ok(ext[pad..pad + n].to_vec())
}

/// Anti-aliased resampling from `from_hz` onto a `to_hz` grid.
///
/// Zero-phase order-8 low-pass at `0.45 * to_hz`, then linear interpolation
/// at `i * from_hz / to_hz`. Output length is `floor((n-1) * to/from) + 1`.
/// Equal rates return the input untouched.
pub fn decimate<T: Real>(x: &[T], from_hz: f64, to_hz: f64) -> Result<Vec<T>, DspError> {
    if !(to_hz > 0.0 && from_hz >= to_hz && from_hz.is_finite()) {
        return Err(DspError::BadRates { from: from_hz, to: to_hz });
    }
    if x.is_empty() {
        return Err(DspError::Empty);
    }
    if from_hz == to_hz {
        return Ok(x.to_vec());
    }
    let spec = FilterSpec::new(FilterSpec::MAX_ORDER, 0.45 * to_hz, from_hz)?;
    let smooth = if x.len() > 3 * spec.order {
        zero_phase_filter(x, &spec)?
    } else {
        x.to_vec()
    };
    let n = x.len();
    let out_len = ((n - 1) as f64 * to_hz / from_hz).floor() as usize + 1;
    let step = from_hz / to_hz;
    Ok((0..out_len)
        .map(|i| {
            let pos = i as f64 * step;
            let lo = (pos.floor() as usize).min(n - 1);
            let frac = pos - lo as f64;
            if lo + 1 >= n || frac == 0.0 {
                smooth[lo]
            } else {
                let f = T::lit(frac);
                smooth[lo] + (smooth[lo + 1] - smooth[lo]) * f
            }
        })
        .collect())
}
