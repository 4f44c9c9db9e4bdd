use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{LabeledTrial, SimError};
use crate::biomech::{EventKind, GaitEvent};
use crate::fuzzy::{GaitPhase, Side};
use crate::protocol::fmt6;

/// One row of the labels log. `events` lists `Kind:side` tokens separated by
/// spaces for events whose first frame is this one.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow {
    pub frame_index: u64,
    pub t_ms: f64,
    pub phase: GaitPhase,
    pub events: Vec<(EventKind, Side)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthReport {
    pub frames: usize,
    pub duration_s: f64,
    /// Strides started within the trial (right heel strikes).
    pub strides: usize,
    /// Frames per phase in row order.
    pub phase_frames: [usize; 8],
    /// `[left, right]`.
    pub heel_strikes: [usize; 2],
    pub toe_offs: [usize; 2],
    pub events: Vec<GaitEvent>,
}

pub fn truth_report(trial: &LabeledTrial) -> TruthReport {
    let mut phase_frames = [0; 8];
    for p in &trial.labels {
        if let Some(i) = p.index() {
            phase_frames[i] += 1;
        }
    }
    let count = |kind, side| trial.events.iter().filter(|e| e.kind == kind && e.side == side).count();
    let heel_strikes = [count(EventKind::HeelStrike, Side::Left), count(EventKind::HeelStrike, Side::Right)];
    TruthReport {
        frames: trial.frames.len(),
        duration_s: trial.profile.duration_s(),
        strides: heel_strikes[1],
        phase_frames,
        heel_strikes,
        toe_offs: [count(EventKind::ToeOff, Side::Left), count(EventKind::ToeOff, Side::Right)],
        events: trial.events.clone(),
    }
}

fn event_token(kind: EventKind, side: Side) -> String {
    format!("{}:{}", kind.name(), side.as_str())
}

fn parse_token(tok: &str) -> Option<(EventKind, Side)> {
    let (k, s) = tok.split_once(':')?;
    let kind = match k {
        "HeelStrike" => EventKind::HeelStrike,
        "ToeOff" => EventKind::ToeOff,
        _ => return None,
    };
    let side = match s {
        "left" => Side::Left,
        "right" => Side::Right,
        _ => return None,
    };
    Some((kind, side))
}

pub fn label_rows(trial: &LabeledTrial) -> Vec<LabelRow> {
    let mut rows: Vec<LabelRow> = trial
        .frames
        .iter()
        .zip(&trial.labels)
        .map(|(f, &phase)| LabelRow { frame_index: f.frame_index, t_ms: f.t_ms, phase, events: vec![] })
        .collect();
    for GaitEvent { kind, side, frame_index, .. } in &trial.events {
        if let Some(r) = rows.get_mut(*frame_index as usize) {
            r.events.push((*kind, *side));
        }
    }
    rows
}

pub fn write_labels_csv<W: Write>(trial: &LabeledTrial, sink: W) -> Result<(), SimError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["frame_index", "t_ms", "phase", "events"])?;
    for r in label_rows(trial) {
        let events: Vec<String> = r.events.iter().map(|&(k, s)| event_token(k, s)).collect();
        w.write_record([r.frame_index.to_string(), fmt6(r.t_ms), r.phase.name().to_string(), events.join(" ")])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_labels_csv<R: Read>(source: R) -> Result<Vec<LabelRow>, SimError> {
    let mut rd = csv::ReaderBuilder::new().from_reader(source);
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let bad = |msg: String| SimError::LabelParse { line, msg };
        if rec.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", rec.len())));
        }
        let frame_index = rec[0].parse().map_err(|_| bad(format!("frame_index {:?}", &rec[0])))?;
        let t_ms = rec[1].parse().map_err(|_| bad(format!("t_ms {:?}", &rec[1])))?;
        let phase = GaitPhase::parse(&rec[2]).ok_or_else(|| bad(format!("phase {:?}", &rec[2])))?;
        let events = rec[3]
            .split_whitespace()
            .map(|t| parse_token(t).ok_or_else(|| bad(format!("event {t:?}"))))
            .collect::<Result<_, _>>()?;
        out.push(LabelRow { frame_index, t_ms, phase, events });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_trial, GaitProfile, NoiseModel};

    #[test]
    fn per_phase_counts_match_fractions() {
        let p = GaitProfile::default();
        let tr = generate_trial(&p, &NoiseModel::default()).unwrap();
        let rep = truth_report(&tr);
        assert_eq!(rep.heel_strikes, [10, 10]);
        assert_eq!(rep.toe_offs, [10, 10]);
        assert_eq!(rep.strides, 10);
        let per_phase = p.step_duration_s * p.rate_hz / 8.0;
        for (k, &c) in rep.phase_frames.iter().enumerate() {
            let expect = per_phase * p.n_strides as f64;
            let extra = if k == 7 { p.lead_in_s * p.rate_hz } else { 0.0 };
            assert!((c as f64 - expect - extra).abs() <= p.n_strides as f64, "phase {k}: {c}");
        }
    }

    #[test]
    fn empty_trial_reports_zeros() {
        let p = GaitProfile { n_strides: 0, lead_in_s: 0.0, ..Default::default() };
        let rep = truth_report(&generate_trial(&p, &NoiseModel::default()).unwrap());
        assert_eq!(
            rep,
            TruthReport { frames: 0, duration_s: 0.0, strides: 0, phase_frames: [0; 8], heel_strikes: [0; 2], toe_offs: [0; 2], events: vec![] }
        );
    }

    #[test]
    fn labels_csv_round_trip() {
        let p = GaitProfile { n_strides: 2, ..Default::default() };
        let tr = generate_trial(&p, &NoiseModel::default()).unwrap();
        let mut buf = Vec::new();
        write_labels_csv(&tr, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("frame_index,t_ms,phase,events\n"));
        let rows = read_labels_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, label_rows(&tr));
        assert_eq!(rows.iter().map(|r| r.events.len()).sum::<usize>(), tr.events.len());
    }

    #[test]
    fn labels_csv_errors() {
        let bad = "frame_index,t_ms,phase,events\n0,0,Flying,\n";
        assert!(matches!(read_labels_csv(bad.as_bytes()), Err(SimError::LabelParse { line: 2, .. })));
        let bad = "frame_index,t_ms,phase,events\n0,0,MidStance,Jump:left\n";
        assert!(read_labels_csv(bad.as_bytes()).is_err());
    }
}
