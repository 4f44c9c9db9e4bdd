use exogait::biomech::{
    cop, decompose_grf, detect_heel_strikes, detect_toe_offs, EventConfig, EventKind, InsoleGeometry, InsoleSize,
};
use exogait::dsp::{zero_phase_filter, FilterSpec};
use exogait::fuzzy::Side;
use exogait::orientation::from_axis_angle;
use exogait::pipeline::{analyze_frames, AnalysisConfig, PipelineConfig};
use exogait::protocol::DeviceId;
use exogait::sim::{generate_trial, GaitProfile, NoiseModel};
use proptest::prelude::*;

fn geometry() -> impl Strategy<Value = InsoleGeometry> {
    prop_oneof![Just(InsoleSize::Small), Just(InsoleSize::Medium), Just(InsoleSize::Large)].prop_map(InsoleGeometry::preset)
}

/// Signed area test: `p` lies inside or on the triangle.
fn in_triangle(p: (f64, f64), xs: [f64; 3], ys: [f64; 3]) -> bool {
    let cross = |i: usize, j: usize| (xs[j] - xs[i]) * (p.1 - ys[i]) - (ys[j] - ys[i]) * (p.0 - xs[i]);
    let d = [cross(0, 1), cross(1, 2), cross(2, 0)];
    let tol = 1e-9;
    d.iter().all(|v| *v >= -tol) || d.iter().all(|v| *v <= tol)
}

proptest! {
    #[test]
    fn cop_lies_in_sensor_triangle(g in geometry(), f in prop::array::uniform3(0.0f64..4095.0)) {
        let c = cop(f, &g, 40.0);
        prop_assert_eq!(c.valid, f.iter().sum::<f64>() >= 40.0);
        if c.valid {
            prop_assert!(in_triangle((c.x_cop, c.y_cop), g.x, g.y));
        }
    }

    #[test]
    fn grf_preserves_norm(axis in prop::array::uniform3(-1.0f64..1.0), angle in -180.0f64..180.0, f in 0.0f64..2000.0) {
        let n = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(n > 0.03);
        let q = from_axis_angle(axis.map(|v| v / n), angle);
        let g = decompose_grf(f, &q).unwrap();
        let n = g.f_world.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((n - f).abs() < 1e-9 * f.max(1.0));
    }

    #[test]
    fn heel_strikes_shift_with_the_signal(shift in 0usize..200) {
        let rate = 130.0;
        let x: Vec<f64> = (0..1300).map(|i| (i as f64 / rate * 2.0 * std::f64::consts::PI * 0.8).sin().max(0.0).powi(3)).collect();
        let mut shifted = vec![0.0; shift];
        shifted.extend_from_slice(&x);
        let cfg = EventConfig::default();
        let a = detect_heel_strikes(&x, rate, &cfg, Side::Left).unwrap();
        let b = detect_heel_strikes(&shifted, rate, &cfg, Side::Left).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (ea, eb) in a.iter().zip(&b) {
            prop_assert_eq!(ea.frame_index + shift as u64, eb.frame_index);
        }
    }
}

#[test]
fn tilted_crutch_components() {
    let q = from_axis_angle([0.0f64, 1.0, 0.0], 30.0);
    let g = decompose_grf(100.0f64, &q).unwrap();
    let want = [50.0, 0.0, 86.60254037844386];
    for (a, b) in g.f_world.iter().zip(want) {
        assert!((a - b).abs() < 1e-9, "{:?}", g.f_world);
    }
    assert!((g.inclination_deg - 30.0).abs() < 1e-9);
}

fn channel(tr: &exogait::sim::LabeledTrial, d: DeviceId, k: usize) -> Vec<f64> {
    tr.frames.iter().map(|f| f64::from(f.slot(d).unwrap().payload.fsr_raw().unwrap()[k])).collect()
}

#[test]
fn simulated_events_are_recovered() {
    let tr = generate_trial(&GaitProfile::default(), &NoiseModel::default()).unwrap();
    let rate = tr.profile.rate_hz;
    let spec = FilterSpec::new(2, 10.0, rate).unwrap();
    let cfg = EventConfig::default();
    for (side, d) in [(Side::Left, DeviceId::InsoleLeft), (Side::Right, DeviceId::InsoleRight)] {
        let f = |k| zero_phase_filter(&channel(&tr, d, k), &spec).unwrap();
        let toe = detect_toe_offs(&f(1), &f(2), rate, &cfg, side).unwrap();
        let truth: Vec<u64> = tr
            .events
            .iter()
            .filter(|e| e.side == side && e.kind == EventKind::ToeOff)
            .map(|e| e.frame_index)
            .collect();
        assert_eq!(toe.len(), truth.len(), "{side:?}");
        for (a, b) in toe.iter().zip(&truth) {
            assert!(a.frame_index.abs_diff(*b) <= 2, "{side:?}: {} vs {b}", a.frame_index);
        }
        let heel = detect_heel_strikes(&f(0), rate, &cfg, side).unwrap();
        for h in &heel {
            let next_toe = toe.iter().find(|t| t.frame_index > h.frame_index);
            let next_heel = heel.iter().find(|x| x.frame_index > h.frame_index);
            if let (Some(t), Some(n)) = (next_toe, next_heel) {
                assert!(t.frame_index < n.frame_index, "{side:?}: toe-off missing between heel strikes");
            }
        }
    }
}

#[test]
fn ten_strides_give_nine_durations() {
    let tr = generate_trial(&GaitProfile::default(), &NoiseModel::default()).unwrap();
    let r = analyze_frames(&tr.frames, tr.profile.rate_hz, &PipelineConfig::default(), &AnalysisConfig::default()).unwrap();
    assert_eq!(r.strides.left.len(), 9);
    assert_eq!(r.strides.right.len(), 9);
    let period = tr.profile.step_duration_s;
    for s in r.strides.left.iter().chain(&r.strides.right) {
        assert!((s - period).abs() < 0.05, "{s} vs {period}");
    }
}

#[test]
fn unloaded_crutches_give_zero_force_but_keep_inclination() {
    let mut tr = generate_trial(&GaitProfile { n_strides: 2, ..Default::default() }, &NoiseModel::default()).unwrap();
    for f in &mut tr.frames {
        for d in [DeviceId::CrutchLeft, DeviceId::CrutchRight] {
            let r = f.slots[d.index()].as_mut().unwrap();
            r.payload = exogait::protocol::Payload::Crutch { load_raw: 0, force_n: None };
        }
    }
    let r = analyze_frames(&tr.frames, tr.profile.rate_hz, &PipelineConfig::default(), &AnalysisConfig::default()).unwrap();
    for g in r.grf.iter().flatten().flatten() {
        assert_eq!(g.f_world, [0.0; 3]);
        assert!(g.inclination_deg > 0.0);
    }
}
