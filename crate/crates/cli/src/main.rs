//! `exogait` command-line front end.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 I/O error.
//! Every run writes a manifest beside its outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc::sync_channel;
use std::thread;

use anyhow::anyhow;
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use exogait::biomech::{InsoleGeometry, LoadCalibration};
use exogait::fuzzy::ClassifierConfig;
use exogait::pipeline::{analyze_frames, process_frames, write_ndjson, write_phases_csv, AnalysisConfig, PipelineConfig};
use exogait::protocol::{decode_packet, read_csv, write_csv, AssemblerConfig, FrameAssembler, SensorFrame, SensorPacket};
use exogait::series::{compare_series, CompareConfig, Series, SeriesError};
use exogait::sim::{emit_packets, generate_trial, sample_truth, write_labels_csv, GaitProfile, NoiseModel, TransportModel};

#[derive(Parser)]
#[command(name = "exogait", version, about = "Gait-phase estimation and analysis for instrumented crutches and insoles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled trial: frames CSV, labels CSV and a packet stream.
    Simulate {
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        noise: Option<PathBuf>,
        #[arg(long)]
        transport: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the noise and transport seeds.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write noise-free CoP and crutch-force truth at this rate.
        #[arg(long)]
        truth_rate_hz: Option<f64>,
    },
    /// Classify the gait phase of every frame.
    Estimate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Centre of pressure, crutch forces, gait events and strides.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        geometry: Option<PathBuf>,
        #[arg(long)]
        cal: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 130.0)]
        rate_hz: f64,
        /// Event detection and filtering settings.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Also write the CoP and crutch-force series for `compare`.
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Agreement statistics between two series.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum)]
        align: Option<Align>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "cop_y_right")]
        column: String,
        #[arg(long)]
        filter: Option<PathBuf>,
    },
    /// Assemble a packet stream into a frames CSV.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        assembler: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Align {
    /// Cut each series at its declared trigger time.
    Trigger,
}

enum Failure {
    Input(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

fn io_at(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(anyhow!("{}: {e}", path.display()))
}

fn read_bytes(path: &Path) -> Outcome<Vec<u8>> {
    fs::read(path).map_err(|e| io_at(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Outcome<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_at(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_at(path, e))
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Outcome<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let bytes = read_bytes(path)?;
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    serde_path_to_error::deserialize(de)
        .map_err(|e| input(anyhow!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))
}

fn read_frames(path: &Path) -> Outcome<Vec<SensorFrame>> {
    let bytes = read_bytes(path)?;
    let frames = read_csv(bytes.as_slice()).map_err(|e| input(anyhow!("{}: {e}", path.display())))?;
    if frames.is_empty() {
        return Err(input(anyhow!("{}: no frames", path.display())));
    }
    Ok(frames)
}

fn to_json(value: &impl Serialize) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serialisable report");
    v.push(b'\n');
    v
}

#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    version: &'static str,
    configs: BTreeMap<&'static str, Option<PathBuf>>,
    seeds: BTreeMap<&'static str, u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl RunManifest {
    fn new(command: &'static str) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            configs: BTreeMap::new(),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn write(&self, path: &Path) -> Outcome<()> {
        write_bytes(path, &to_json(self))
    }
}

/// `<out>.manifest.json` beside a single output file.
fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn simulate(
    profile: Option<PathBuf>,
    noise: Option<PathBuf>,
    transport: Option<PathBuf>,
    out: PathBuf,
    seed: Option<u64>,
    truth_rate_hz: Option<f64>,
) -> Outcome<()> {
    let gait: GaitProfile = load_config(profile.as_deref())?;
    let mut nm: NoiseModel = load_config(noise.as_deref())?;
    let mut tm: TransportModel = load_config(transport.as_deref())?;
    if let Some(s) = seed {
        nm.seed = s;
        tm.seed = s;
    }
    let trial = generate_trial(&gait, &nm).map_err(input)?;
    let streams = emit_packets(&trial.frames, &tm).map_err(input)?;

    let mut frames_csv = Vec::new();
    write_csv(&trial.frames, &mut frames_csv).map_err(input)?;
    let mut labels_csv = Vec::new();
    write_labels_csv(&trial, &mut labels_csv).map_err(input)?;
    let mut packets = Vec::new();
    write_ndjson(&streams, &mut packets).map_err(|e| io_at(&out, e))?;

    let mut files = vec![
        ("frames.csv", frames_csv),
        ("labels.csv", labels_csv),
        ("packets.ndjson", packets),
    ];
    if let Some(rate) = truth_rate_hz {
        let truth = sample_truth(&gait, &nm, rate).map_err(input)?;
        let mut buf = Vec::new();
        Series::from_truth(&truth).write(&mut buf).map_err(input)?;
        files.push(("truth_series.csv", buf));
    }
    fs::create_dir_all(&out).map_err(|e| io_at(&out, e))?;
    let mut manifest = RunManifest::new("simulate");
    for (name, bytes) in &files {
        let path = out.join(name);
        write_bytes(&path, bytes)?;
        manifest.outputs.push(path);
    }
    manifest.configs.insert("profile", profile);
    manifest.configs.insert("noise", noise);
    manifest.configs.insert("transport", transport);
    manifest.seeds.insert("noise", nm.seed);
    manifest.seeds.insert("transport", tm.seed);
    manifest.write(&out.join("manifest.json"))
}

fn estimate(inp: PathBuf, rules: Option<PathBuf>, out: PathBuf) -> Outcome<()> {
    let frames = read_frames(&inp)?;
    let classifier: ClassifierConfig = load_config(rules.as_deref())?;
    classifier.validate().map_err(input)?;
    let cfg = PipelineConfig { classifier, ..Default::default() };
    let rows = process_frames(&frames, &cfg).map_err(input)?;
    let mut buf = Vec::new();
    write_phases_csv(&rows, &mut buf).map_err(input)?;
    write_bytes(&out, &buf)?;
    let mut m = RunManifest::new("estimate");
    m.configs.insert("rules", rules);
    m.inputs.push(inp);
    m.outputs.push(out.clone());
    m.write(&manifest_path(&out))
}

#[allow(clippy::too_many_arguments)]
fn analyze(
    inp: PathBuf,
    geometry: Option<PathBuf>,
    cal: Option<PathBuf>,
    out: PathBuf,
    rate_hz: f64,
    events: Option<PathBuf>,
    series: Option<PathBuf>,
) -> Outcome<()> {
    let frames = read_frames(&inp)?;
    let cfg = PipelineConfig {
        geometry: load_config::<InsoleGeometry>(geometry.as_deref())?,
        load_calibration: load_config::<LoadCalibration>(cal.as_deref())?,
        ..Default::default()
    };
    let acfg: AnalysisConfig = load_config(events.as_deref())?;
    let report = analyze_frames(&frames, rate_hz, &cfg, &acfg).map_err(input)?;
    write_bytes(&out, &to_json(&report))?;
    let mut m = RunManifest::new("analyze");
    m.outputs.push(out.clone());
    if let Some(path) = &series {
        let mut buf = Vec::new();
        Series::from_analysis(&report).write(&mut buf).map_err(input)?;
        write_bytes(path, &buf)?;
        m.outputs.push(path.clone());
    }
    m.configs.insert("geometry", geometry);
    m.configs.insert("cal", cal);
    m.configs.insert("events", events);
    m.inputs.push(inp);
    m.write(&manifest_path(&out))
}

fn read_series(path: &Path) -> Outcome<Series> {
    let bytes = read_bytes(path)?;
    Series::read(bytes.as_slice()).map_err(|e| input(anyhow!("{}: {e}", path.display())))
}

fn compare(a: PathBuf, b: PathBuf, align: Option<Align>, out: PathBuf, column: String, filter: Option<PathBuf>) -> Outcome<()> {
    let (sa, sb) = (read_series(&a)?, read_series(&b)?);
    let cfg: CompareConfig = load_config(filter.as_deref())?;
    let report = compare_series(&sa, &sb, &column, align.is_some(), &cfg).map_err(|e| match e {
        SeriesError::Io(e) => Failure::Io(e.into()),
        e => input(e),
    })?;
    write_bytes(&out, &to_json(&report))?;
    let mut m = RunManifest::new("compare");
    m.configs.insert("filter", filter);
    m.inputs.extend([a, b]);
    m.outputs.push(out.clone());
    m.write(&manifest_path(&out))
}

/// Decode on a reader thread feeding the assembler through a bounded queue.
fn convert(inp: PathBuf, out: PathBuf, assembler: Option<PathBuf>) -> Outcome<()> {
    let cfg: AssemblerConfig = load_config(assembler.as_deref())?;
    let mut asm = FrameAssembler::new(cfg).map_err(input)?;
    let file = fs::File::open(&inp).map_err(|e| io_at(&inp, e))?;
    let (tx, rx) = sync_channel::<Outcome<SensorPacket>>(1024);
    let path = inp.clone();
    let reader = thread::spawn(move || {
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let msg = match line {
                Err(e) => Err(io_at(&path, e)),
                Ok(l) if l.trim().is_empty() => continue,
                Ok(l) => decode_packet(l.as_bytes())
                    .map_err(|e| input(anyhow!("{}: line {}: {e}", path.display(), i + 1))),
            };
            let stop = msg.is_err();
            if tx.send(msg).is_err() || stop {
                break;
            }
        }
    });
    let mut frames = Vec::new();
    for msg in rx {
        asm.push(msg?, &mut frames);
    }
    reader.join().map_err(|_| Failure::Io(anyhow!("packet reader panicked")))?;
    let stats = asm.finish(&mut frames);
    if stats.packets == 0 {
        return Err(input(anyhow!("{}: no packets", inp.display())));
    }
    eprintln!("{}", serde_json::to_string(&stats).expect("serialisable stats"));
    let mut buf = Vec::new();
    write_csv(&frames, &mut buf).map_err(input)?;
    write_bytes(&out, &buf)?;
    let mut m = RunManifest::new("convert");
    m.configs.insert("assembler", assembler);
    m.inputs.push(inp);
    m.outputs.push(out.clone());
    m.write(&manifest_path(&out))
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Simulate { profile, noise, transport, out, seed, truth_rate_hz } => {
            simulate(profile, noise, transport, out, seed, truth_rate_hz)
        }
        Command::Estimate { input, rules, out } => estimate(input, rules, out),
        Command::Analyze { input, geometry, cal, out, rate_hz, events, series } => {
            analyze(input, geometry, cal, out, rate_hz, events, series)
        }
        Command::Compare { a, b, align, out, column, filter } => compare(a, b, align, out, column, filter),
        Command::Convert { input, out, assembler } => convert(input, out, assembler),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            let (Failure::Input(e) | Failure::Io(e)) = f;
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
