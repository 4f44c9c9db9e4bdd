use std::fmt::Write;

use serde::Deserialize;
use serde_json::error::Category;

use super::{DeviceId, ImuSample, Payload, ProtocolError, SensorPacket, FSR_RAW_MAX, LOAD_RAW_MAX, LOAD_RAW_MIN};

/// Render with at most six fractional digits, trailing zeros trimmed and
/// negative zero written as `0`.
pub fn fmt6(x: f64) -> String {
    let mut s = String::with_capacity(16);
    push6(&mut s, x);
    s
}

pub(crate) fn push6(out: &mut String, x: f64) {
    let start = out.len();
    write!(out, "{x:.6}").expect("writing to String");
    if out[start..].contains('.') {
        let trimmed = out[start..].trim_end_matches('0').trim_end_matches('.').len();
        out.truncate(start + trimmed);
    }
    if &out[start..] == "-0" {
        out.truncate(start);
        out.push('0');
    }
}

/// `x` rounded to what [`fmt6`] preserves.
pub fn quantize6(x: f64) -> f64 {
    fmt6(x).parse().expect("fmt6 output parses")
}

fn push_list(out: &mut String, xs: &[f64]) {
    out.push('[');
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push6(out, x);
    }
    out.push(']');
}

/// Canonical JSON text: keys in the order `device, seq, t_ms, imu, payload`,
/// no whitespace, no trailing newline.
pub fn encode_packet(p: &SensorPacket) -> Vec<u8> {
    let mut s = String::with_capacity(160);
    write!(s, r#"{{"device":"{}","seq":{},"t_ms":"#, p.device.name(), p.seq).expect("writing to String");
    push6(&mut s, p.t_ms);
    s.push_str(r#","imu":{"quat":"#);
    push_list(&mut s, &p.imu.quat);
    s.push_str(r#","accel":"#);
    push_list(&mut s, &p.imu.accel);
    s.push_str(r#"},"payload":{"#);
    match p.payload {
        Payload::Crutch { load_raw, force_n } => {
            write!(s, r#""load_raw":{load_raw}"#).expect("writing to String");
            if let Some(f) = force_n {
                s.push_str(r#","force_n":"#);
                push6(&mut s, f);
            }
        }
        Payload::Insole { fsr_raw: [a, b, c] } => {
            write!(s, r#""fsr_raw":[{a},{b},{c}]"#).expect("writing to String");
        }
    }
    s.push_str("}}");
    s.into_bytes()
}

#[derive(Deserialize)]
struct RawImu {
    quat: [f64; 4],
    accel: [f64; 3],
}

#[derive(Deserialize)]
struct RawPayload {
    load_raw: Option<i64>,
    force_n: Option<f64>,
    fsr_raw: Option<[i64; 3]>,
}

#[derive(Deserialize)]
struct RawPacket {
    device: DeviceId,
    seq: u64,
    t_ms: f64,
    imu: RawImu,
    payload: RawPayload,
}

/// Parse one packet. Unknown keys are ignored.
pub fn decode_packet(bytes: &[u8]) -> Result<SensorPacket, ProtocolError> {
    let raw: RawPacket = serde_json::from_slice(bytes).map_err(|e| match e.classify() {
        Category::Data => ProtocolError::SchemaViolation(e.to_string()),
        _ => ProtocolError::MalformedPacket(e.to_string()),
    })?;
    let device = raw.device;
    let pl = raw.payload;
    let payload = match (device.is_crutch(), pl.load_raw, pl.fsr_raw) {
        (_, Some(_), Some(_)) => {
            return Err(ProtocolError::SchemaViolation("payload carries both load_raw and fsr_raw".into()))
        }
        (true, Some(v), None) => {
            if !(LOAD_RAW_MIN as i64..=LOAD_RAW_MAX as i64).contains(&v) {
                return Err(ProtocolError::SchemaViolation(format!("load_raw {v} exceeds 24 bits")));
            }
            Payload::Crutch { load_raw: v as i32, force_n: pl.force_n }
        }
        (false, None, Some(f)) => {
            if let Some(v) = f.iter().find(|v| !(0..=FSR_RAW_MAX as i64).contains(v)) {
                return Err(ProtocolError::SchemaViolation(format!("fsr_raw {v} outside 12 bits")));
            }
            Payload::Insole { fsr_raw: f.map(|v| v as u16) }
        }
        (true, None, Some(_)) | (false, Some(_), None) => return Err(ProtocolError::KindMismatch(device)),
        (_, None, None) => return Err(ProtocolError::SchemaViolation("empty payload".into())),
    };
    let p = SensorPacket {
        device,
        seq: raw.seq,
        t_ms: raw.t_ms,
        imu: ImuSample { quat: raw.imu.quat, accel: raw.imu.accel },
        payload,
    };
    p.validate()?;
    Ok(p)
}
