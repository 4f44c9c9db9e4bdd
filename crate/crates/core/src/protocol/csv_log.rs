use std::io::{Read, Write};

use super::codec::push6;
use super::{DeviceId, ImuSample, Payload, ProtocolError, Reading, SensorFrame, FSR_RAW_MAX};

/// Column order of the frame log.
pub const CSV_COLUMNS: [&str; 33] = [
    "t_ms",
    "crutch_left_accel_x",
    "crutch_left_accel_y",
    "crutch_left_accel_z",
    "crutch_left_roll",
    "crutch_left_pitch",
    "crutch_left_yaw",
    "crutch_right_accel_x",
    "crutch_right_accel_y",
    "crutch_right_accel_z",
    "crutch_right_roll",
    "crutch_right_pitch",
    "crutch_right_yaw",
    "insole_left_accel_x",
    "insole_left_accel_y",
    "insole_left_accel_z",
    "insole_left_roll",
    "insole_left_pitch",
    "insole_left_yaw",
    "insole_right_accel_x",
    "insole_right_accel_y",
    "insole_right_accel_z",
    "insole_right_roll",
    "insole_right_pitch",
    "insole_right_yaw",
    "load_left",
    "load_right",
    "L_heel",
    "L_m1",
    "L_m5",
    "R_heel",
    "R_m1",
    "R_m5",
];

const LOAD_COL: usize = 25;
const FSR_COL: usize = 27;

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

fn imu_col(d: DeviceId) -> usize {
    1 + 6 * d.index()
}

fn payload_cols(d: DeviceId) -> std::ops::Range<usize> {
    match d {
        DeviceId::CrutchLeft => LOAD_COL..LOAD_COL + 1,
        DeviceId::CrutchRight => LOAD_COL + 1..LOAD_COL + 2,
        DeviceId::InsoleLeft => FSR_COL..FSR_COL + 3,
        DeviceId::InsoleRight => FSR_COL + 3..FSR_COL + 6,
    }
}

fn render_row(f: &SensorFrame, cells: &mut [String; 33]) {
    for c in cells.iter_mut() {
        c.clear();
    }
    push6(&mut cells[0], f.t_ms);
    for d in DeviceId::ALL {
        let Some(r) = f.slot(d) else { continue };
        let base = imu_col(d);
        let e = r.imu.euler_deg();
        for (k, v) in r.imu.accel.iter().chain(e.iter()).enumerate() {
            push6(&mut cells[base + k], *v);
        }
        let cols = payload_cols(d);
        match r.payload {
            Payload::Crutch { load_raw, .. } => cells[cols.start] = load_raw.to_string(),
            Payload::Insole { fsr_raw } => {
                for (k, v) in fsr_raw.iter().enumerate() {
                    cells[cols.start + k] = v.to_string();
                }
            }
        }
    }
}

/// Write the header and one row per frame. Gaps are empty cells; loads are
/// raw counts and the calibrated force is not stored.
pub fn write_csv<W: Write>(frames: &[SensorFrame], sink: W) -> Result<usize, ProtocolError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(CSV_COLUMNS)?;
    let mut cells: [String; 33] = std::array::from_fn(|_| String::new());
    for f in frames {
        render_row(f, &mut cells);
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(frames.len())
}

fn parse<T: std::str::FromStr>(rec: &csv::StringRecord, line: u64, col: usize) -> Result<T, ProtocolError> {
    let raw = &rec[col];
    raw.trim().parse().map_err(|_| ProtocolError::NumericParse {
        line,
        column: CSV_COLUMNS[col].to_string(),
        value: raw.to_string(),
    })
}

fn parse_slot(rec: &csv::StringRecord, line: u64, d: DeviceId) -> Result<Option<Reading>, ProtocolError> {
    let imu = imu_col(d)..imu_col(d) + 6;
    let cols = imu.clone().chain(payload_cols(d));
    let empty = cols.clone().filter(|&c| rec[c].trim().is_empty()).count();
    if empty == cols.clone().count() {
        return Ok(None);
    }
    let mut v = [0.0; 6];
    for (k, c) in imu.enumerate() {
        v[k] = parse(rec, line, c)?;
    }
    let imu = ImuSample::from_euler_deg([v[3], v[4], v[5]], [v[0], v[1], v[2]]);
    let pc = payload_cols(d);
    let payload = if d.is_crutch() {
        Payload::Crutch { load_raw: parse(rec, line, pc.start)?, force_n: None }
    } else {
        let mut fsr = [0u16; 3];
        for (k, c) in pc.enumerate() {
            fsr[k] = parse(rec, line, c)?;
            if fsr[k] > FSR_RAW_MAX {
                return Err(ProtocolError::NumericParse {
                    line,
                    column: CSV_COLUMNS[c].to_string(),
                    value: rec[c].to_string(),
                });
            }
        }
        Payload::Insole { fsr_raw: fsr }
    };
    Ok(Some(Reading { imu, payload }))
}

/// Parse a frame log. `frame_index` is the 0-based data row number and
/// orientation is rebuilt from the stored Euler angles.
pub fn read_csv<R: Read>(source: R) -> Result<Vec<SensorFrame>, ProtocolError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(source);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r?,
        None => return Err(ProtocolError::HeaderMismatch("missing header row".into())),
    };
    if header.len() != CSV_COLUMNS.len() || header.iter().zip(CSV_COLUMNS).any(|(a, b)| a != b) {
        let found: Vec<&str> = header.iter().collect();
        return Err(ProtocolError::HeaderMismatch(format!("found {}", found.join(","))));
    }
    let mut frames = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != CSV_COLUMNS.len() {
            return Err(ProtocolError::RowArity { line, expected: CSV_COLUMNS.len(), found: rec.len() });
        }
        let t_ms = parse(&rec, line, 0)?;
        let mut slots = [None; 4];
        for d in DeviceId::ALL {
            slots[d.index()] = parse_slot(&rec, line, d)?;
        }
        frames.push(SensorFrame { frame_index: frames.len() as u64, t_ms, slots });
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orientation::from_axis_angle;

    fn frame(i: u64) -> SensorFrame {
        let crutch = |load_raw, deg| Reading {
            imu: ImuSample { quat: from_axis_angle([0.0, 1.0, 0.0], deg), accel: [0.5, -0.25, 9.81] },
            payload: Payload::Crutch { load_raw, force_n: None },
        };
        let insole = |fsr_raw| Reading {
            imu: ImuSample { quat: from_axis_angle([1.0, 0.0, 0.0], 3.0), accel: [1.0, 0.0, 9.7] },
            payload: Payload::Insole { fsr_raw },
        };
        SensorFrame {
            frame_index: i,
            t_ms: i as f64 * 1000.0 / 130.0,
            slots: [Some(crutch(-120, 12.5)), Some(crutch(88000, -4.0)), Some(insole([3276, 12, 0])), Some(insole([0, 4095, 7]))],
        }
    }

    fn to_text(frames: &[SensorFrame]) -> String {
        let mut buf = Vec::new();
        write_csv(frames, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn header_and_arity() {
        let text = to_text(&[frame(0)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], csv_header());
        assert_eq!(lines[1].split(',').count(), 33);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn gap_renders_empty() {
        let mut f = frame(0);
        f.slots[3] = None;
        let text = to_text(&[f]);
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        let empty: Vec<usize> = (0..33).filter(|&c| row[c].is_empty()).collect();
        assert_eq!(empty, [19, 20, 21, 22, 23, 24, 30, 31, 32]);
    }

    #[test]
    fn round_trip() {
        let mut frames: Vec<SensorFrame> = (0..5).map(frame).collect();
        frames[2].slots[0] = None;
        let text = to_text(&frames);
        let back = read_csv(text.as_bytes()).unwrap();
        assert_eq!(to_text(&back), text);
        for (a, b) in frames.iter().zip(&back) {
            assert_eq!(a.gap_mask(), b.gap_mask());
            assert!((a.t_ms - b.t_ms).abs() <= 5e-7);
            for (x, y) in a.slots.iter().zip(&b.slots) {
                if let (Some(x), Some(y)) = (x, y) {
                    assert_eq!(x.payload, y.payload);
                    assert!(x.imu.quat.iter().zip(&y.imu.quat).all(|(p, q)| (p - q).abs() < 1e-7));
                }
            }
        }
    }

    #[test]
    fn short_row_names_line() {
        let text = to_text(&[frame(0), frame(1)]);
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let cut = lines[2].rfind(',').unwrap();
        lines[2].truncate(cut);
        let bad = lines.join("\n");
        match read_csv(bad.as_bytes()) {
            Err(ProtocolError::RowArity { line: 3, found: 32, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn permuted_header() {
        let text = to_text(&[frame(0)]).replacen("L_m1,L_m5", "L_m5,L_m1", 1);
        assert!(matches!(read_csv(text.as_bytes()), Err(ProtocolError::HeaderMismatch(_))));
        assert!(matches!(read_csv(&b""[..]), Err(ProtocolError::HeaderMismatch(_))));
    }

    #[test]
    fn bad_number() {
        let text = to_text(&[frame(0)]).replacen(",3276,", ",12x,", 1);
        assert!(matches!(read_csv(text.as_bytes()), Err(ProtocolError::NumericParse { line: 2, .. })));
    }
}
