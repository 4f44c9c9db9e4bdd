//! Uniformly sampled multi-column series and their comparison.
//!
//! File layout: `# rate_hz=<R>` on the first line, optionally
//! `# trigger_ms=<T>` on the second, then a CSV header `t_ms,<columns...>`
//! and one row per sample.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{agreement, decimate, zero_phase_filter, AgreementReport, DspError, FilterSpec};
use crate::pipeline::AnalysisReport;
use crate::protocol::fmt6;
use crate::sim::TruthSeries;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing `# rate_hz=` header")]
    MissingRate,
    #[error("no column {0:?}")]
    NoColumn(String),
    #[error("sampling rates differ ({a} Hz vs {b} Hz); pass an alignment")]
    RateMismatch { a: f64, b: f64 },
    #[error("series too short after alignment")]
    TooShort,
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub rate_hz: f64,
    /// Time of the shared synchronisation trigger on this series' clock.
    pub trigger_ms: f64,
    pub columns: Vec<String>,
    pub t_ms: Vec<f64>,
    /// One vector per column.
    pub data: Vec<Vec<f64>>,
}

pub const COP_SERIES_COLUMNS: [&str; 4] = ["cop_y_left", "cop_y_right", "f_axial_left", "f_axial_right"];

impl Series {
    pub fn column(&self, name: &str) -> Result<&[f64], SeriesError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.data[i].as_slice())
            .ok_or_else(|| SeriesError::NoColumn(name.to_string()))
    }

    /// Anteroposterior CoP (zero without contact) and crutch axial force.
    pub fn from_truth(t: &TruthSeries) -> Self {
        let data = vec![
            t.cop.iter().map(|c| c[0].y_cop).collect(),
            t.cop.iter().map(|c| c[1].y_cop).collect(),
            t.grf.iter().map(|g| g[0].f_axial).collect(),
            t.grf.iter().map(|g| g[1].f_axial).collect(),
        ];
        Self {
            rate_hz: t.rate_hz,
            trigger_ms: 0.0,
            columns: COP_SERIES_COLUMNS.map(String::from).to_vec(),
            t_ms: t.t_ms.clone(),
            data,
        }
    }

    /// The same columns from an analysis; missing readings become zero.
    pub fn from_analysis(r: &AnalysisReport) -> Self {
        let cop = |k: usize| r.cop.iter().map(|c| c[k].map_or(0.0, |c| c.y_cop)).collect();
        let grf = |k: usize| r.grf.iter().map(|g| g[k].map_or(0.0, |g| g.f_axial)).collect();
        Self {
            rate_hz: r.rate_hz,
            trigger_ms: 0.0,
            columns: COP_SERIES_COLUMNS.map(String::from).to_vec(),
            t_ms: r.t_ms.clone(),
            data: vec![cop(0), cop(1), grf(0), grf(1)],
        }
    }

    pub fn write<W: Write>(&self, mut sink: W) -> Result<(), SeriesError> {
        writeln!(sink, "# rate_hz={}", fmt6(self.rate_hz))?;
        if self.trigger_ms != 0.0 {
            writeln!(sink, "# trigger_ms={}", fmt6(self.trigger_ms))?;
        }
        writeln!(sink, "t_ms,{}", self.columns.join(","))?;
        for (i, t) in self.t_ms.iter().enumerate() {
            let mut line = fmt6(*t);
            for col in &self.data {
                line.push(',');
                line.push_str(&fmt6(col[i]));
            }
            writeln!(sink, "{line}")?;
        }
        sink.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(source: R) -> Result<Self, SeriesError> {
        let mut rate = None;
        let mut trigger_ms = 0.0;
        let mut columns: Option<Vec<String>> = None;
        let mut t_ms = Vec::new();
        let mut data: Vec<Vec<f64>> = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line = line?;
            let n = i + 1;
            let bad = |msg: String| SeriesError::Parse { line: n, msg };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let (k, v) = meta.trim().split_once('=').ok_or_else(|| bad(format!("bad metadata {meta:?}")))?;
                let v: f64 = v.trim().parse().map_err(|_| bad(format!("bad value {v:?}")))?;
                match k.trim() {
                    "rate_hz" if v > 0.0 => rate = Some(v),
                    "trigger_ms" => trigger_ms = v,
                    k => return Err(bad(format!("unknown metadata {k:?} = {v}"))),
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            match &columns {
                None => {
                    if fields.first() != Some(&"t_ms") || fields.len() < 2 {
                        return Err(bad("header must be t_ms,<columns...>".into()));
                    }
                    columns = Some(fields[1..].iter().map(|s| s.to_string()).collect());
                    data = vec![Vec::new(); fields.len() - 1];
                }
                Some(cols) => {
                    if fields.len() != cols.len() + 1 {
                        return Err(bad(format!("expected {} fields, found {}", cols.len() + 1, fields.len())));
                    }
                    let mut vals = fields.iter().map(|f| f.parse::<f64>().map_err(|_| bad(format!("bad number {f:?}"))));
                    t_ms.push(vals.next().expect("t_ms field")?);
                    for col in &mut data {
                        col.push(vals.next().expect("checked arity")?);
                    }
                }
            }
        }
        Ok(Self {
            rate_hz: rate.ok_or(SeriesError::MissingRate)?,
            trigger_ms,
            columns: columns.ok_or(SeriesError::Parse { line: 0, msg: "missing header".into() })?,
            t_ms,
            data,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub filter_order: usize,
    /// Zero-phase low-pass applied to both series after resampling.
    pub cutoff_hz: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { filter_order: 2, cutoff_hz: 10.0 }
    }
}

/// Compare one column of `a` (reference) and `b`.
///
/// With `align`, each series is cut to start at its trigger. The higher-rate
/// series is then resampled to the lower rate, both are low-pass filtered
/// without phase shift and truncated to the common length.
pub fn compare_series(
    a: &Series,
    b: &Series,
    column: &str,
    align: bool,
    cfg: &CompareConfig,
) -> Result<AgreementReport, SeriesError> {
    if a.rate_hz != b.rate_hz && !align {
        return Err(SeriesError::RateMismatch { a: a.rate_hz, b: b.rate_hz });
    }
    let prep = |s: &Series| -> Result<Vec<f64>, SeriesError> {
        let x = s.column(column)?;
        let start = if align { s.t_ms.iter().position(|&t| t >= s.trigger_ms).unwrap_or(x.len()) } else { 0 };
        if start >= x.len() {
            return Err(SeriesError::TooShort);
        }
        let rate = a.rate_hz.min(b.rate_hz);
        Ok(decimate(&x[start..], s.rate_hz, rate)?)
    };
    let (xa, xb) = (prep(a)?, prep(b)?);
    let n = xa.len().min(xb.len());
    let rate = a.rate_hz.min(b.rate_hz);
    let spec = FilterSpec::new(cfg.filter_order, cfg.cutoff_hz, rate)?;
    let (fa, fb) = (zero_phase_filter(&xa[..n], &spec)?, zero_phase_filter(&xb[..n], &spec)?);
    Ok(agreement(&fa, &fb)?)
}
