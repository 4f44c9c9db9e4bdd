use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::BiomechError;
use crate::fuzzy::Side;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    HeelStrike,
    ToeOff,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::HeelStrike => "HeelStrike",
            EventKind::ToeOff => "ToeOff",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitEvent {
    pub kind: EventKind,
    pub side: Side,
    pub t_ms: f64,
    pub frame_index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventConfig {
    /// Minimum peak prominence as a fraction of the trial's dynamic range.
    pub prominence_frac: f64,
    /// Minimum spacing between events of the same kind.
    pub refractory_ms: f64,
    /// Toe-off level on the per-trial normalised forefoot signal.
    pub toe_off_threshold: f64,
}

impl Default for EventConfig {
    fn default() -> Self {
        Self { prominence_frac: 0.2, refractory_ms: 500.0, toe_off_threshold: 0.1 }
    }
}

fn event(kind: EventKind, side: Side, i: usize, rate_hz: f64) -> GaitEvent {
    GaitEvent { kind, side, t_ms: i as f64 * 1000.0 / rate_hz, frame_index: i as u64 }
}

/// Local maxima (plateaus reported at their middle sample) with their
/// topographic prominence.
fn peaks_with_prominence<T: Real>(x: &[T]) -> Vec<(usize, T)> {
    let n = x.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i] > x[i - 1] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                let peak = (i + j) / 2;
                let h = x[peak];
                let mut left_min = h;
                for k in (0..i).rev() {
                    if x[k] > h {
                        break;
                    }
                    left_min = left_min.min(x[k]);
                }
                let mut right_min = h;
                for &v in &x[j + 1..] {
                    if v > h {
                        break;
                    }
                    right_min = right_min.min(v);
                }
                out.push((peak, h - left_min.max(right_min)));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Heel strikes as prominent local maxima of a (pre-filtered) heel signal.
/// Within the refractory period only the highest peak survives.
pub fn detect_heel_strikes<T: Real>(
    heel: &[T],
    rate_hz: f64,
    cfg: &EventConfig,
    side: Side,
) -> Result<Vec<GaitEvent>, BiomechError> {
    if heel.is_empty() {
        return Err(BiomechError::EmptySignal);
    }
    if !(rate_hz > 0.0) {
        return Err(BiomechError::BadConfig(format!("rate_hz = {rate_hz}")));
    }
    let (lo, hi) = heel.iter().fold((heel[0], heel[0]), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    if !(range > T::zero()) {
        return Ok(Vec::new());
    }
    let min_prom = T::lit(cfg.prominence_frac) * range;
    let mut peaks: Vec<(usize, T)> = peaks_with_prominence(heel).into_iter().filter(|(_, p)| *p >= min_prom).collect();
    // highest first; earlier wins ties
    peaks.sort_by(|a, b| heel[b.0].partial_cmp(&heel[a.0]).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    let gap = cfg.refractory_ms * rate_hz / 1000.0;
    let mut kept: Vec<usize> = Vec::new();
    for (p, _) in peaks {
        if kept.iter().all(|&k| ((p as f64) - (k as f64)).abs() >= gap) {
            kept.push(p);
        }
    }
    kept.sort_unstable();
    Ok(kept.into_iter().map(|i| event(EventKind::HeelStrike, side, i, rate_hz)).collect())
}

/// Toe-offs where `max(m1, m5)`, scaled to `[0, 1]` over the trial, falls
/// below the threshold and stays below for the refractory period. The event
/// is the first sample below the threshold.
pub fn detect_toe_offs<T: Real>(
    m1: &[T],
    m5: &[T],
    rate_hz: f64,
    cfg: &EventConfig,
    side: Side,
) -> Result<Vec<GaitEvent>, BiomechError> {
    if m1.len() != m5.len() {
        return Err(BiomechError::LengthMismatch { a: m1.len(), b: m5.len() });
    }
    if m1.is_empty() {
        return Err(BiomechError::EmptySignal);
    }
    if !(rate_hz > 0.0) {
        return Err(BiomechError::BadConfig(format!("rate_hz = {rate_hz}")));
    }
    let fore: Vec<T> = m1.iter().zip(m5).map(|(&a, &b)| a.max(b)).collect();
    let (lo, hi) = fore.iter().fold((fore[0], fore[0]), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return Ok(Vec::new());
    }
    let thr = lo + T::lit(cfg.toe_off_threshold) * (hi - lo);
    let hold = (cfg.refractory_ms * rate_hz / 1000.0).ceil() as usize;
    let mut out = Vec::new();
    for i in 1..fore.len() {
        if fore[i - 1] >= thr && fore[i] < thr {
            let end = i + hold;
            if end <= fore.len() && fore[i..end].iter().all(|&v| v < thr) {
                out.push(event(EventKind::ToeOff, side, i, rate_hz));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StrideDurations {
    /// Seconds between consecutive heel strikes of each foot.
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

pub fn stride_durations(events: &[GaitEvent]) -> StrideDurations {
    let per_side = |side| {
        let t: Vec<f64> = events
            .iter()
            .filter(|e| e.kind == EventKind::HeelStrike && e.side == side)
            .map(|e| e.t_ms)
            .collect();
        t.windows(2).map(|w| (w[1] - w[0]) / 1000.0).collect()
    };
    StrideDurations { left: per_side(Side::Left), right: per_side(Side::Right) }
}

pub fn write_events_csv<W: Write>(events: &[GaitEvent], sink: W) -> Result<(), BiomechError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["kind", "side", "t_ms", "frame_index"])?;
    for e in events {
        w.write_record([
            e.kind.name(),
            e.side.as_str(),
            &crate::protocol::fmt6(e.t_ms),
            &e.frame_index.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_events_csv<R: Read>(source: R) -> Result<Vec<GaitEvent>, BiomechError> {
    let mut rdr = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |msg: String| BiomechError::EventParse { line, msg };
        if rec.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", rec.len())));
        }
        let kind = match &rec[0] {
            "HeelStrike" => EventKind::HeelStrike,
            "ToeOff" => EventKind::ToeOff,
            k => return Err(bad(format!("unknown event kind {k:?}"))),
        };
        let side = match &rec[1] {
            "left" => Side::Left,
            "right" => Side::Right,
            s => return Err(bad(format!("unknown side {s:?}"))),
        };
        let t_ms = rec[2].parse().map_err(|_| bad(format!("bad t_ms {:?}", &rec[2])))?;
        let frame_index = rec[3].parse().map_err(|_| bad(format!("bad frame_index {:?}", &rec[3])))?;
        out.push(GaitEvent { kind, side, t_ms, frame_index });
    }
    Ok(out)
}
