mod common;

use common::{oracle_safety, run_safe_controller};
use exogait::biomech::GrfVector;
use exogait::control::{
    adaptive_multiplier, basic_step, safety_check, AssistConfig, CommandKind, ControlConfig, ControllerState,
    SafetyConfig, SafetyHistory,
};
use exogait::fuzzy::{ClassifierConfig, GaitPhase, PhaseClassifier, Side};
use exogait::pipeline::{process_frames, PipelineConfig};
use exogait::protocol::{DeviceId, Payload, SensorFrame};
use exogait::sim::{generate_trial, GaitProfile, NoiseModel};
use proptest::prelude::*;

fn clean_frames(n_strides: usize) -> Vec<SensorFrame> {
    generate_trial(&GaitProfile { n_strides, ..Default::default() }, &NoiseModel::default()).unwrap().frames
}

fn basic_triggers(frames: &[SensorFrame]) -> Vec<usize> {
    let mut c = PhaseClassifier::new(ClassifierConfig::default()).unwrap();
    let mut s = ControllerState::default();
    let mut out = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        let e = c.push(&f.fsr_six().unwrap());
        let (cmd, next) = basic_step(&e, f.t_ms, &s, &Default::default());
        s = next;
        if cmd.is_trigger() {
            out.push(i);
        }
    }
    out
}

fn triggers(frames: &[SensorFrame], cfg: &ControlConfig) -> Vec<usize> {
    run_safe_controller(frames, cfg).iter().enumerate().filter(|(_, s)| s.command.is_trigger()).map(|(i, _)| i).collect()
}

fn unload(f: &mut SensorFrame, d: DeviceId) {
    f.slots[d.index()].as_mut().unwrap().payload = Payload::Crutch { load_raw: 0, force_n: None };
}

/// History plus the metrics for frame `i` of a clean trial.
fn snapshot(frames: &[SensorFrame], i: usize, cfg: &SafetyConfig) -> (SafetyHistory, [GrfVector; 2]) {
    let mut h = SafetyHistory::new(cfg.history_ms);
    for f in &frames[..=i] {
        h.push(f);
    }
    let m = process_frames(&frames[i..=i], &PipelineConfig::default()).unwrap();
    (h, m[0].grf.map(Option::unwrap))
}

#[test]
fn safety_predicates_on_a_stance_snapshot() {
    let frames = clean_frames(4);
    let cfg = SafetyConfig::default();
    let i = basic_triggers(&frames)[1];
    let (h, grf) = snapshot(&frames, i, &cfg);
    let r = safety_check(&frames[i], &grf[0], &grf[1], &h, &cfg).unwrap();
    assert!(r.pass(), "{r:?}");

    let unloaded = GrfVector { f_axial: 0.0, f_world: [0.0; 3], ..grf[0] };
    let r = safety_check(&frames[i], &unloaded, &grf[1], &h, &cfg).unwrap();
    assert_eq!(r.crutch_contact, [false, true]);
    assert!(!r.pass());

    let tilted = GrfVector { inclination_deg: 80.0, ..grf[1] };
    let r = safety_check(&frames[i], &grf[0], &tilted, &h, &cfg).unwrap();
    assert_eq!(r.crutch_orientation, [true, false]);
    assert!(!r.pass());
}

#[test]
fn short_history_is_an_error() {
    let frames = clean_frames(2);
    let cfg = SafetyConfig::default();
    let (h, grf) = snapshot(&frames, 10, &cfg);
    assert!(safety_check(&frames[10], &grf[0], &grf[1], &h, &cfg).is_err());
}

#[test]
fn clean_trace_matches_basic_controller_after_warm_up() {
    let frames = clean_frames(6);
    let cfg = ControlConfig::default();
    let warm = frames.iter().position(|f| f.t_ms >= cfg.safety.history_ms).unwrap();
    let basic: Vec<usize> = basic_triggers(&frames).into_iter().filter(|&i| i > warm).collect();
    let safe: Vec<usize> = triggers(&frames, &cfg).into_iter().filter(|&i| i > warm).collect();
    assert!(basic.len() >= 4);
    assert_eq!(safe, basic);
}

#[test]
fn blocked_trigger_fires_on_first_passing_frame() {
    let mut frames = clean_frames(6);
    let cfg = ControlConfig::default();
    let due = basic_triggers(&frames)[2];
    for f in &mut frames[due..due + 5] {
        unload(f, DeviceId::CrutchLeft);
    }
    let trace = run_safe_controller(&frames, &cfg);
    assert!(!trace[due..due + 5].iter().any(|s| s.command.is_trigger()));
    assert_eq!(trace[due + 5].command.kind, CommandKind::TriggerStep(Side::Right));
}

#[test]
fn failing_safety_never_triggers() {
    let mut frames = clean_frames(5);
    for f in &mut frames {
        unload(f, DeviceId::CrutchRight);
    }
    assert!(triggers(&frames, &ControlConfig::default()).is_empty());
}

#[test]
fn every_trigger_has_a_passing_check() {
    let mut frames = clean_frames(6);
    for (i, f) in frames.iter_mut().enumerate() {
        if (i / 37) % 3 == 0 {
            unload(f, DeviceId::CrutchLeft);
        }
    }
    let cfg = ControlConfig::default();
    let trace = run_safe_controller(&frames, &cfg);
    let mut n = 0;
    for (i, s) in trace.iter().enumerate().filter(|(_, s)| s.command.is_trigger()) {
        assert_eq!(oracle_safety(&frames, i, &s.grf, &cfg.safety), Some(true), "frame {i}");
        n += 1;
    }
    assert!(n > 0);
}

#[test]
fn committed_phase_follows_estimates() {
    let frames = clean_frames(2);
    let mut c = PhaseClassifier::new(ClassifierConfig::default()).unwrap();
    let mut s = ControllerState::default();
    for f in &frames {
        let e = c.push(&f.fsr_six().unwrap());
        s = basic_step(&e, f.t_ms, &s, &Default::default()).1;
        if e.selected != GaitPhase::Unknown {
            assert_eq!(s.committed, e.selected);
        }
    }
}

fn grf(f: f64, incl: f64) -> GrfVector {
    GrfVector { f_axial: f, f_world: [0.0, 0.0, f], inclination_deg: incl }
}

proptest! {
    #[test]
    fn multiplier_is_clamped_and_monotone_in_load(
        f1 in -500.0f64..2000.0,
        df in 0.0f64..500.0,
        other in 0.0f64..2000.0,
        incl in -10.0f64..90.0,
    ) {
        let cfg = AssistConfig::default();
        let m = |f: f64| match adaptive_multiplier(&grf(f, incl), &grf(other.min(f1), incl), 0.0, &cfg).kind {
            CommandKind::SetAssistMultiplier(m) => m,
            k => panic!("{k:?}"),
        };
        let (a, b) = (m(f1), m(f1 + df));
        prop_assert!(a >= cfg.g_min && a <= cfg.g_max);
        prop_assert!(a <= b);
    }
}

#[test]
fn multiplier_nan_falls_back_to_nominal() {
    let cfg = AssistConfig::default();
    let c = adaptive_multiplier(&grf(f64::NAN, 10.0), &grf(f64::NAN, 10.0), 5.0, &cfg);
    assert_eq!(c.kind, CommandKind::SetAssistMultiplier(cfg.g0));
}
