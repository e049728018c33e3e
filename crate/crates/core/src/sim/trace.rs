use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::link::LinkStats;
use crate::model::{ActuationCommand, ActuatorKind, SensorKind};

pub const TRACE_FORMAT: &str = "dice-trace";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordCause {
    /// A frame arrived and was actuated.
    Frame,
    /// No frame for longer than the stale timeout; output went neutral.
    Stale,
    /// Something went wrong without stopping the run.
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t_ms: u64,
    pub cause: RecordCause,
    pub active_sensor: SensorKind,
    pub active_actuator: ActuatorKind,
    /// Intermediate value received, if any.
    pub value: Option<u8>,
    /// Sensor that produced `value`.
    pub source: Option<SensorKind>,
    pub command: Option<ActuationCommand>,
    pub link: LinkStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

pub fn header_line() -> String {
    format!("{{\"format\":\"{TRACE_FORMAT}\",\"v\":1}}")
}

pub fn write_trace<W: Write>(mut w: W, records: &[TraceRecord]) -> io::Result<()> {
    writeln!(w, "{}", header_line())?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn trace_to_string(records: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, records).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Reads a trace written by [`write_trace`], header included.
pub fn read_trace(text: &str) -> Result<Vec<TraceRecord>, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == header_line() => {}
        Some(h) => return Err(format!("unexpected trace header `{h}`")),
        None => return Err("empty trace".into()),
    }
    lines
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("record {}: {e}", i + 1)))
        .collect()
}
