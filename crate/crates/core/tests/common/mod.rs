#![allow(dead_code)]

use exogait::biomech::{detect_heel_strikes, EventConfig, EventKind, GrfVector};
use exogait::control::{safe_step, ControlCommand, ControlConfig, ControllerState, SafetyHistory};
use exogait::dsp::{zero_phase_filter, FilterSpec};
use exogait::fuzzy::{ClassifierConfig, GaitPhase, PhaseClassifier, PhaseEstimate, Side};
use exogait::pipeline::{Estimator, PipelineConfig};
use exogait::protocol::{DeviceId, SensorFrame};
use exogait::sim::LabeledTrial;

/// Frames within this many samples of a label change are not scored.
pub const TRANSITION_MARGIN: usize = 3;

/// Share of non-transition frames whose estimate equals the label.
pub fn phase_agreement(tr: &LabeledTrial, cfg: &ClassifierConfig) -> f64 {
    let mut c = PhaseClassifier::new(cfg.clone()).unwrap();
    let est: Vec<GaitPhase> = tr.frames.iter().map(|f| c.push(&f.fsr_six().unwrap()).selected).collect();
    let n = tr.labels.len();
    let change: Vec<bool> = (0..n).map(|i| i > 0 && tr.labels[i] != tr.labels[i - 1]).collect();
    let near = |i: usize| (i.saturating_sub(TRANSITION_MARGIN)..(i + TRANSITION_MARGIN + 1).min(n)).any(|j| change[j]);
    let (mut ok, mut total) = (0usize, 0usize);
    for i in (0..n).filter(|&i| !near(i)) {
        total += 1;
        ok += usize::from(est[i] == tr.labels[i]);
    }
    ok as f64 / total as f64
}

fn heel_channel(tr: &LabeledTrial, d: DeviceId) -> Vec<f64> {
    tr.frames.iter().map(|f| f64::from(f.slot(d).unwrap().payload.fsr_raw().unwrap()[0])).collect()
}

/// RMSE (ms) between each true heel strike and the nearest detection on
/// the low-passed heel channel of the same foot.
pub fn heel_strike_rmse_ms(tr: &LabeledTrial) -> f64 {
    let rate = tr.profile.rate_hz;
    let spec = FilterSpec::new(2, 10.0, rate).unwrap();
    let mut sq = Vec::new();
    for (side, d) in [(Side::Left, DeviceId::InsoleLeft), (Side::Right, DeviceId::InsoleRight)] {
        let heel = zero_phase_filter(&heel_channel(tr, d), &spec).unwrap();
        let det = detect_heel_strikes(&heel, rate, &EventConfig::default(), side).unwrap();
        for e in tr.events.iter().filter(|e| e.side == side && e.kind == EventKind::HeelStrike) {
            let err = det.iter().map(|x| x.t_ms - e.t_ms).min_by(|a, b| a.abs().total_cmp(&b.abs()));
            // a missed event counts as one full stride of error
            let err = err.unwrap_or(tr.profile.step_duration_s * 1000.0);
            sq.push(err * err);
        }
    }
    (sq.iter().sum::<f64>() / sq.len() as f64).sqrt()
}

/// Stand-in for a missing crutch reading: no load, undefined inclination.
pub fn absent_grf() -> GrfVector {
    GrfVector { f_axial: 0.0, f_world: [0.0; 3], inclination_deg: f64::NAN }
}

pub struct TraceStep {
    pub estimate: PhaseEstimate<f64>,
    pub command: ControlCommand,
    pub grf: [GrfVector; 2],
}

/// Run the safety-gated controller over a frame sequence.
pub fn run_safe_controller(frames: &[SensorFrame], cfg: &ControlConfig) -> Vec<TraceStep> {
    let mut metrics = Estimator::new(&PipelineConfig::default()).unwrap();
    let mut classifier = PhaseClassifier::new(ClassifierConfig::default()).unwrap();
    let mut history = SafetyHistory::new(cfg.safety.history_ms);
    let mut state = ControllerState::default();
    let mut out = Vec::with_capacity(frames.len());
    for f in frames {
        let m = metrics.push(f).unwrap();
        let grf = m.grf.map(|g| g.unwrap_or_else(absent_grf));
        let estimate = match f.fsr_six() {
            Some(raw) => classifier.push(&raw),
            None => unknown_estimate(f.frame_index),
        };
        history.push(f);
        let command = match safe_step(&estimate, f, [&grf[0], &grf[1]], &history, &state, &cfg.step, &cfg.safety) {
            Ok((cmd, next)) => {
                state = next;
                cmd
            }
            Err(_) => ControlCommand::noop(f.t_ms),
        };
        out.push(TraceStep { estimate, command, grf });
    }
    out
}

pub fn unknown_estimate(frame_index: u64) -> PhaseEstimate<f64> {
    PhaseEstimate {
        grades: exogait::fuzzy::PhaseGrades([0.0; 8]),
        selected: GaitPhase::Unknown,
        raw_argmax: GaitPhase::Unknown,
        frame_index,
    }
}

/// Brute-force safety verdict for frame `i`, `None` while the frames before
/// it span less than the history window.
pub fn oracle_safety(frames: &[SensorFrame], i: usize, grf: &[GrfVector; 2], cfg: &exogait::control::SafetyConfig) -> Option<bool> {
    let t = frames[i].t_ms;
    let start = (0..=i).rev().find(|&j| frames[j].t_ms <= t - cfg.history_ms + 1e-9)?;
    let insoles = [DeviceId::InsoleLeft, DeviceId::InsoleRight];
    let mut ok = true;
    for (k, d) in insoles.into_iter().enumerate() {
        let peak = frames[start..=i].iter().filter_map(|f| f.slot(d)).map(|r| r.imu.accel[0]).fold(f64::NEG_INFINITY, f64::max);
        ok &= peak >= cfg.forward_accel_threshold;
        ok &= match frames[i].slot(d) {
            Some(r) => {
                let [w, x, y, z] = r.imu.quat;
                let pitch = (2.0 * (w * y - z * x)).clamp(-1.0, 1.0).asin().to_degrees();
                pitch >= cfg.insole_pitch_range_deg[0] && pitch <= cfg.insole_pitch_range_deg[1]
            }
            None => false,
        };
        let g = &grf[k];
        ok &= g.f_axial >= cfg.crutch_contact_threshold_n;
        ok &= g.inclination_deg >= cfg.crutch_incl_range_deg[0] && g.inclination_deg <= cfg.crutch_incl_range_deg[1];
    }
    Some(ok)
}
