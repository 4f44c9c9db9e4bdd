use serde::{Deserialize, Serialize};

use super::{wilcoxon_signed_rank, DspError};
use crate::scalar::Real;

fn check_pair<T>(a: &[T], b: &[T]) -> Result<(), DspError> {
    if a.len() != b.len() {
        return Err(DspError::LengthMismatch { a: a.len(), b: b.len() });
    }
    if a.is_empty() {
        return Err(DspError::Empty);
    }
    Ok(())
}

pub fn mean<T: Real>(x: &[T]) -> Result<T, DspError> {
    if x.is_empty() {
        return Err(DspError::Empty);
    }
    Ok(x.iter().fold(T::zero(), |s, &v| s + v) / T::from_count(x.len()))
}

/// Root-mean-square of the paired differences.
pub fn rmse<T: Real>(a: &[T], b: &[T]) -> Result<T, DspError> {
    check_pair(a, b)?;
    let ss = a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + (x - y) * (x - y));
    Ok((ss / T::from_count(a.len())).sqrt())
}

/// Sample Pearson correlation coefficient, clamped to `[-1, 1]`.
pub fn pearson<T: Real>(a: &[T], b: &[T]) -> Result<T, DspError> {
    check_pair(a, b)?;
    if a.len() < 2 {
        return Err(DspError::ConstantInput);
    }
    let (ma, mb) = (mean(a)?, mean(b)?);
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab = sab + dx * dy;
        saa = saa + dx * dx;
        sbb = sbb + dy * dy;
    }
    if saa == T::zero() || sbb == T::zero() {
        return Err(DspError::ConstantInput);
    }
    let r = sab / (saa.sqrt() * sbb.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// Linear-interpolation (type 7) quantile of an ascending-sorted slice.
pub fn quantile<T: Real>(sorted: &[T], p: f64) -> Result<T, DspError> {
    if sorted.is_empty() {
        return Err(DspError::Empty);
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= sorted.len() || frac == 0.0 {
        return Ok(sorted[lo]);
    }
    Ok(sorted[lo] + (sorted[lo + 1] - sorted[lo]) * T::lit(frac))
}

/// Median and interquartile range (Q3 - Q1), type-7 quantiles.
pub fn median_iqr<T: Real>(x: &[T]) -> Result<(T, T), DspError> {
    if x.is_empty() {
        return Err(DspError::Empty);
    }
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let med = quantile(&s, 0.5)?;
    let iqr = quantile(&s, 0.75)? - quantile(&s, 0.25)?;
    Ok((med, iqr))
}

/// Bland–Altman bias and 95% limits of agreement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlandAltman<T> {
    pub mean_diff: T,
    pub loa_low: T,
    pub loa_high: T,
}

/// Limits are `mean(d) ± 1.96 sd(d)` with `d = a - b` and the `n - 1` sample
/// standard deviation.
pub fn bland_altman<T: Real>(a: &[T], b: &[T]) -> Result<BlandAltman<T>, DspError> {
    check_pair(a, b)?;
    if a.len() < 2 {
        return Err(DspError::TooShort { len: a.len(), min: 1 });
    }
    let d: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
    let m = mean(&d)?;
    let ss = d.iter().fold(T::zero(), |s, &v| s + (v - m) * (v - m));
    let sd = (ss / T::from_count(d.len() - 1)).sqrt();
    let half = T::lit(1.96) * sd;
    Ok(BlandAltman { mean_diff: m, loa_low: m - half, loa_high: m + half })
}

/// Paired agreement summary between a reference series and a measurement.
///
/// `pearson_r` and `wilcoxon_p` are `None` when undefined for the input
/// (constant series, all-zero differences); the reason lands in `notes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub n: usize,
    pub rmse: f64,
    pub pearson_r: Option<f64>,
    pub median_diff: f64,
    pub iqr_diff: f64,
    pub mean_diff: f64,
    pub loa_low: f64,
    pub loa_high: f64,
    pub wilcoxon_w_plus: Option<f64>,
    pub wilcoxon_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub fn agreement<T: Real>(reference: &[T], measured: &[T]) -> Result<AgreementReport, DspError> {
    check_pair(reference, measured)?;
    let mut notes = Vec::new();
    let rmse = rmse(reference, measured)?.as_f64();
    let pearson_r = match pearson(reference, measured) {
        Ok(r) => Some(r.as_f64()),
        Err(e) => {
            notes.push(format!("pearson: {e}"));
            None
        }
    };
    let diffs: Vec<T> = reference.iter().zip(measured).map(|(&a, &b)| a - b).collect();
    let (median_diff, iqr_diff) = median_iqr(&diffs)?;
    let ba = if reference.len() >= 2 {
        bland_altman(reference, measured)?
    } else {
        BlandAltman { mean_diff: diffs[0], loa_low: diffs[0], loa_high: diffs[0] }
    };
    let (w_plus, p) = match wilcoxon_signed_rank(reference, measured) {
        Ok(w) => (Some(w.w_plus), Some(w.p_two_sided)),
        Err(e) => {
            notes.push(format!("wilcoxon: {e}"));
            (None, None)
        }
    };
    Ok(AgreementReport {
        n: reference.len(),
        rmse,
        pearson_r,
        median_diff: median_diff.as_f64(),
        iqr_diff: iqr_diff.as_f64(),
        mean_diff: ba.mean_diff.as_f64(),
        loa_low: ba.loa_low.as_f64(),
        loa_high: ba.loa_high.as_f64(),
        wilcoxon_w_plus: w_plus,
        wilcoxon_p: p,
        notes,
    })
}
