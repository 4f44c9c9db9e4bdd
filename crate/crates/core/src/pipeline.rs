//! Offline processing chain: newline-delimited packets are decoded, assembled
//! into frames, classified and reduced to per-frame metrics.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::biomech::{
    calibrate_load, cop, decompose_grf, detect_heel_strikes, detect_toe_offs, stride_durations, BiomechError,
    CopSample, EventConfig, GaitEvent, GrfVector, InsoleGeometry, LoadCalibration, StrideDurations,
    DEFAULT_COP_EPSILON,
};
use crate::dsp::{median_iqr, zero_phase_filter, DspError, FilterSpec};
use crate::fuzzy::{ClassifierConfig, FuzzyError, GaitPhase, PhaseClassifier, Side};
use crate::protocol::{
    assemble_frames, decode_packet, encode_packet, fmt6, AssemblerConfig, AssemblyStats, DeviceId, ProtocolError,
    SensorFrame, SensorPacket,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("line {line}: {source}")]
    Packet { line: usize, source: ProtocolError },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error(transparent)]
    Biomech(#[from] BiomechError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub assembler: AssemblerConfig,
    pub classifier: ClassifierConfig,
    pub geometry: InsoleGeometry,
    pub load_calibration: LoadCalibration,
}

/// Decode one packet per non-blank line and route it to its device stream,
/// keeping arrival order. Errors carry the 1-based line number.
pub fn decode_ndjson(bytes: &[u8]) -> Result<Vec<Vec<SensorPacket>>, PipelineError> {
    let mut streams = vec![Vec::new(); 4];
    for (i, line) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let p = decode_packet(line).map_err(|source| PipelineError::Packet { line: i + 1, source })?;
        streams[p.device.index()].push(p);
    }
    Ok(streams)
}

/// Merge the streams into one packet per line, earliest head timestamp
/// first (lower stream index on ties). Each stream keeps its own order.
pub fn write_ndjson<W: Write>(streams: &[Vec<SensorPacket>], mut sink: W) -> std::io::Result<usize> {
    let mut heads = vec![0usize; streams.len()];
    let mut n = 0;
    loop {
        let next = (0..streams.len())
            .filter_map(|k| streams[k].get(heads[k]).map(|p| (k, p.t_ms)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let Some((k, _)) = next else { break };
        sink.write_all(&encode_packet(&streams[k][heads[k]]))?;
        sink.write_all(b"\n")?;
        heads[k] += 1;
        n += 1;
    }
    sink.flush()?;
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame_index: u64,
    pub t_ms: f64,
    pub phase: GaitPhase,
    pub grades: [f64; 8],
    /// `[left, right]`; `None` where the insole or crutch reading is missing.
    pub cop: [Option<CopSample>; 2],
    pub grf: [Option<GrfVector>; 2],
}

/// Per-frame classification and metrics with streaming state.
#[derive(Debug, Clone)]
pub struct Estimator {
    classifier: PhaseClassifier,
    geometry: InsoleGeometry,
    load_calibration: LoadCalibration,
}

impl Estimator {
    pub fn new(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        cfg.geometry.validate()?;
        cfg.load_calibration.validate()?;
        Ok(Self {
            classifier: PhaseClassifier::new(cfg.classifier.clone())?,
            geometry: cfg.geometry,
            load_calibration: cfg.load_calibration,
        })
    }

    /// Frames missing an insole are `Unknown` and leave the classifier
    /// state untouched.
    pub fn push(&mut self, frame: &SensorFrame) -> Result<FrameMetrics, PipelineError> {
        let (phase, grades) = match frame.fsr_six() {
            Some(raw) => {
                let e = self.classifier.push(&raw);
                (e.selected, e.grades.0)
            }
            None => (GaitPhase::Unknown, [0.0; 8]),
        };
        let cop = [DeviceId::InsoleLeft, DeviceId::InsoleRight].map(|d| {
            frame
                .slot(d)
                .and_then(|r| r.payload.fsr_raw())
                .map(|f| cop(f.map(f64::from), &self.geometry, DEFAULT_COP_EPSILON))
        });
        let mut grf = [None; 2];
        for (k, d) in [DeviceId::CrutchLeft, DeviceId::CrutchRight].into_iter().enumerate() {
            if let Some(r) = frame.slot(d) {
                if let Some(raw) = r.payload.load_raw() {
                    let f = calibrate_load(i64::from(raw), &self.load_calibration);
                    grf[k] = Some(decompose_grf(f, &r.imu.quat)?);
                }
            }
        }
        Ok(FrameMetrics { frame_index: frame.frame_index, t_ms: frame.t_ms, phase, grades, cop, grf })
    }
}

pub fn process_frames(frames: &[SensorFrame], cfg: &PipelineConfig) -> Result<Vec<FrameMetrics>, PipelineError> {
    let mut est = Estimator::new(cfg)?;
    frames.iter().map(|f| est.push(f)).collect()
}

/// Decode, assemble, classify and measure a newline-delimited packet stream.
pub fn run_ndjson(bytes: &[u8], cfg: &PipelineConfig) -> Result<(Vec<FrameMetrics>, AssemblyStats), PipelineError> {
    let streams = decode_ndjson(bytes)?;
    let (frames, stats) = assemble_frames(&streams, &cfg.assembler)?;
    Ok((process_frames(&frames, cfg)?, stats))
}

/// Write `frame_index,t_ms,phase` and one grade column per phase.
pub fn write_phases_csv<W: Write>(rows: &[FrameMetrics], sink: W) -> Result<(), PipelineError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    let mut header = vec!["frame_index".to_string(), "t_ms".into(), "phase".into()];
    header.extend(GaitPhase::ALL.iter().map(|p| format!("g_{}", p.name())));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.frame_index.to_string(), fmt6(r.t_ms), r.phase.name().to_string()];
        rec.extend(r.grades.iter().map(|g| fmt6(*g)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `(frame_index, phase)` pairs from a phases CSV.
pub fn read_phases_csv<R: Read>(source: R) -> Result<Vec<(u64, GaitPhase)>, PipelineError> {
    let mut rd = csv::ReaderBuilder::new().from_reader(source);
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let bad = |column: &str, value: &str| ProtocolError::NumericParse {
            line: i as u64 + 2,
            column: column.to_string(),
            value: value.to_string(),
        };
        let idx = rec.get(0).unwrap_or("");
        let phase = rec.get(2).unwrap_or("");
        out.push((
            idx.parse().map_err(|_| bad("frame_index", idx))?,
            GaitPhase::parse(phase).ok_or_else(|| bad("phase", phase))?,
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub events: EventConfig,
    /// Zero-phase low-pass applied to the FSR channels before event
    /// detection.
    pub fsr_cutoff_hz: f64,
    pub filter_order: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { events: EventConfig::default(), fsr_cutoff_hz: 10.0, filter_order: 2 }
    }
}

/// Median and interquartile range; `None` for an empty sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub n: usize,
    pub median: Option<f64>,
    pub iqr: Option<f64>,
}

impl Spread {
    pub fn of(x: &[f64]) -> Self {
        let m = median_iqr(x).ok();
        Self { n: x.len(), median: m.map(|v| v.0), iqr: m.map(|v| v.1) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    /// `[left, right]` throughout.
    pub stride_s: [Spread; 2],
    pub cop_y_mm: [Spread; 2],
    pub crutch_axial_n: [Spread; 2],
    pub crutch_inclination_deg: [Spread; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub rate_hz: f64,
    pub frames: usize,
    pub t_ms: Vec<f64>,
    pub cop: Vec<[Option<CopSample>; 2]>,
    pub grf: Vec<[Option<GrfVector>; 2]>,
    pub events: Vec<GaitEvent>,
    pub strides: StrideDurations,
    pub summary: AnalysisSummary,
}

/// Forward-fill missing samples; leading gaps take the first present value.
fn fill(x: &[Option<f64>]) -> Vec<f64> {
    let first = x.iter().flatten().next().copied().unwrap_or(0.0);
    let mut last = first;
    x.iter()
        .map(|v| {
            if let Some(v) = v {
                last = *v;
            }
            last
        })
        .collect()
}

/// CoP, GRF, events and strides of a frame sequence.
pub fn analyze_frames(
    frames: &[SensorFrame],
    rate_hz: f64,
    pipeline: &PipelineConfig,
    cfg: &AnalysisConfig,
) -> Result<AnalysisReport, PipelineError> {
    if frames.is_empty() {
        return Err(ProtocolError::EmptyInput.into());
    }
    let metrics = process_frames(frames, pipeline)?;
    let spec = FilterSpec::new(cfg.filter_order, cfg.fsr_cutoff_hz, rate_hz)?;
    let mut events = Vec::new();
    for (side, d) in [(Side::Left, DeviceId::InsoleLeft), (Side::Right, DeviceId::InsoleRight)] {
        let ch = |k: usize| -> Vec<Option<f64>> {
            frames.iter().map(|f| f.slot(d).and_then(|r| r.payload.fsr_raw()).map(|v| f64::from(v[k]))).collect()
        };
        let smooth = |k: usize| zero_phase_filter(&fill(&ch(k)), &spec);
        let (heel, m1, m5) = (smooth(0)?, smooth(1)?, smooth(2)?);
        let mut with_index = |mut ev: Vec<GaitEvent>| {
            for e in &mut ev {
                e.frame_index = frames[e.frame_index as usize].frame_index;
            }
            events.extend(ev);
        };
        with_index(detect_heel_strikes(&heel, rate_hz, &cfg.events, side)?);
        with_index(detect_toe_offs(&m1, &m5, rate_hz, &cfg.events, side)?);
    }
    events.sort_by(|a, b| a.t_ms.total_cmp(&b.t_ms));
    let strides = stride_durations(&events);
    let per = |f: &dyn Fn(&FrameMetrics, usize) -> Option<f64>| -> [Spread; 2] {
        [0, 1].map(|k| Spread::of(&metrics.iter().filter_map(|m| f(m, k)).collect::<Vec<_>>()))
    };
    let summary = AnalysisSummary {
        stride_s: [Spread::of(&strides.left), Spread::of(&strides.right)],
        cop_y_mm: per(&|m, k| m.cop[k].filter(|c| c.valid).map(|c| c.y_cop)),
        crutch_axial_n: per(&|m, k| m.grf[k].map(|g| g.f_axial)),
        crutch_inclination_deg: per(&|m, k| m.grf[k].map(|g| g.inclination_deg)),
    };
    Ok(AnalysisReport {
        rate_hz,
        frames: frames.len(),
        t_ms: metrics.iter().map(|m| m.t_ms).collect(),
        cop: metrics.iter().map(|m| m.cop).collect(),
        grf: metrics.iter().map(|m| m.grf).collect(),
        events,
        strides,
        summary,
    })
}
