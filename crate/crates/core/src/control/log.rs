use std::io::{Read, Write};

use super::{CommandKind, ControlCommand, ControlError};
use crate::fuzzy::Side;
use crate::protocol::fmt6;

/// Write commands as `t_ms,kind,arg`; `arg` is the side or the multiplier.
pub fn write_command_log<W: Write>(cmds: &[ControlCommand], sink: W) -> Result<(), ControlError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["t_ms", "kind", "arg"])?;
    for c in cmds {
        let (kind, arg) = match c.kind {
            CommandKind::TriggerStep(s) => ("TriggerStep", s.as_str().to_string()),
            CommandKind::Halt => ("Halt", String::new()),
            CommandKind::SetAssistMultiplier(v) => ("SetAssistMultiplier", fmt6(v)),
            CommandKind::NoOp => ("NoOp", String::new()),
        };
        w.write_record([fmt6(c.t_ms).as_str(), kind, arg.as_str()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_command_log<R: Read>(source: R) -> Result<Vec<ControlCommand>, ControlError> {
    let mut rd = csv::ReaderBuilder::new().from_reader(source);
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let bad = |msg: String| ControlError::LogParse { line, msg };
        let t_ms: f64 = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("t_ms".into()))?;
        let arg = rec.get(2).unwrap_or("");
        let kind = match rec.get(1).unwrap_or("") {
            "TriggerStep" => CommandKind::TriggerStep(match arg {
                "left" => Side::Left,
                "right" => Side::Right,
                s => return Err(bad(format!("side {s:?}"))),
            }),
            "Halt" => CommandKind::Halt,
            "SetAssistMultiplier" => {
                CommandKind::SetAssistMultiplier(arg.parse().map_err(|_| bad(format!("multiplier {arg:?}")))?)
            }
            "NoOp" => CommandKind::NoOp,
            k => return Err(bad(format!("kind {k:?}"))),
        };
        out.push(ControlCommand { kind, t_ms });
    }
    Ok(out)
}
