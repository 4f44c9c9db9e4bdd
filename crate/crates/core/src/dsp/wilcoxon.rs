use serde::{Deserialize, Serialize};

use super::DspError;
use crate::scalar::Real;

/// Largest number of non-zero differences for which the null distribution
/// is computed exactly; above this the tie- and continuity-corrected normal
/// approximation is used.
pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences (average ranks for ties).
    pub w_plus: f64,
    pub p_two_sided: f64,
    /// Differences left after dropping exact zeros.
    pub n: usize,
    pub exact: bool,
}

/// Average ranks of `|d|`, doubled so tied ranks stay integral.
pub(crate) fn doubled_ranks(abs: &[f64]) -> Vec<u32> {
    let mut idx: Vec<usize> = (0..abs.len()).collect();
    idx.sort_by(|&i, &j| abs[i].total_cmp(&abs[j]));
    let mut ranks = vec![0u32; abs.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start;
        while end + 1 < idx.len() && abs[idx[end + 1]] == abs[idx[start]] {
            end += 1;
        }
        // positions start+1 ..= end+1, average doubled = (start+1) + (end+1)
        let r2 = (start + end + 2) as u32;
        for &k in &idx[start..=end] {
            ranks[k] = r2;
        }
        start = end + 1;
    }
    ranks
}

/// How the two-sided p-value is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PValueMethod {
    /// Exact for `n <= EXACT_MAX_N`, normal approximation above.
    Auto,
    Exact,
    NormalApprox,
}

/// Wilcoxon signed-rank test on paired samples `a - b`.
pub fn wilcoxon_signed_rank<T: Real>(a: &[T], b: &[T]) -> Result<WilcoxonResult, DspError> {
    wilcoxon_signed_rank_with(a, b, PValueMethod::Auto)
}

/// [`wilcoxon_signed_rank`] with an explicit p-value method. `Exact` is
/// refused above 62 differences, where the sign-pattern count overflows.
pub fn wilcoxon_signed_rank_with<T: Real>(
    a: &[T],
    b: &[T],
    method: PValueMethod,
) -> Result<WilcoxonResult, DspError> {
    if a.len() != b.len() {
        return Err(DspError::LengthMismatch { a: a.len(), b: b.len() });
    }
    let d: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).as_f64())
        .filter(|v| *v != 0.0)
        .collect();
    if d.is_empty() {
        return Err(DspError::AllZeroDiffs);
    }
    let n = d.len();
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = doubled_ranks(&abs);
    let w2: u32 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let w_plus = w2 as f64 / 2.0;

    let exact = match method {
        PValueMethod::Auto => n <= EXACT_MAX_N,
        PValueMethod::Exact => n <= 62,
        PValueMethod::NormalApprox => false,
    };
    if exact {
        let p = exact_p(&ranks, w2);
        return Ok(WilcoxonResult { w_plus, p_two_sided: p, n, exact: true });
    }
    let p = normal_p(&abs, n, w_plus);
    Ok(WilcoxonResult { w_plus, p_two_sided: p, n, exact: false })
}

/// Exact null distribution of the doubled rank sum over all `2^n` sign
/// assignments, counted by convolution rather than by listing patterns.
fn exact_p(ranks: &[u32], w2: u32) -> f64 {
    let total: u32 = ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    let all = (1u64 << ranks.len()) as f64;
    let upper: u64 = counts[w2 as usize..].iter().sum();
    let lower: u64 = counts[..=w2 as usize].iter().sum();
    (2.0 * upper.min(lower) as f64 / all).min(1.0)
}

fn normal_p(abs: &[f64], n: usize, w_plus: f64) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut sorted = abs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    libm::erfc(z / std::f64::consts::SQRT_2).min(1.0)
}
