//! Commands accepted by the engine and the JSON Lines scenario format.
//!
//! A scenario line is a command object tagged by `event` plus a `t_ms`:
//!
//! ```text
//! {"format":"dice-scenario","v":1}
//! {"t_ms":0,"event":"rotate","cube":"actuator","top":"power_led"}
//! {"t_ms":100,"event":"stimulus","sensor":"thermometer","value":50.0}
//! {"t_ms":5000,"event":"end"}
//! ```
//!
//! The header line is optional. Live clients send the same objects tagged
//! by `cmd` instead of `event`, without `t_ms`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuator::PeltierMode;
use crate::dsl::MappingTarget;
use crate::model::{ActuatorKind, CubeKind, Face, SensorKind};
use crate::sensor::Waveform;

pub const SCENARIO_FORMAT: &str = "dice-scenario";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubeRole {
    Sensor,
    Actuator,
}

impl fmt::Display for CubeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CubeRole::Sensor => "sensor",
            CubeRole::Actuator => "actuator",
        })
    }
}

/// Face to bring up, named either by face or by the kind mounted on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopSpec {
    Face(Face),
    Sensor(SensorKind),
    Actuator(ActuatorKind),
}

impl std::str::FromStr for TopSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(f) = s.parse::<Face>() {
            return Ok(TopSpec::Face(f));
        }
        if let Some(k) = SensorKind::from_name(s) {
            return Ok(TopSpec::Sensor(k));
        }
        if let Some(k) = ActuatorKind::from_name(s) {
            return Ok(TopSpec::Actuator(k));
        }
        Err(format!("`{s}` is neither a face nor a sensor or actuator"))
    }
}

fn default_peak_to_peak_dc() -> f64 {
    511.5
}

/// Tone used when a microphone stimulus is given as a bare amplitude. At the
/// default 8 kHz capture rate its peaks land exactly on samples.
pub const MIC_TONE_HZ: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Command {
    /// `value` is in the sensor's physical unit: potentiometer angle in
    /// degrees, °C, peak-to-peak microphone amplitude in AD counts, cm, 0/1
    /// for motion, lux. A distance without value (or with `no_echo`) reads
    /// NoEcho. A microphone may instead take a full `waveform`.
    Stimulus {
        sensor: SensorKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        waveform: Option<Waveform>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        no_echo: bool,
    },
    Rotate {
        cube: CubeRole,
        top: String,
    },
    SetLink {
        #[serde(default)]
        loss: f64,
        #[serde(default)]
        latency_ms: u64,
        #[serde(default)]
        jitter_ms: u64,
    },
    SetMapping {
        target: MappingTarget,
        program: String,
    },
    /// Restores the stock mapping of a target.
    ResetMapping {
        target: MappingTarget,
    },
    SetPeltierMode {
        mode: PeltierMode,
    },
    End,
}

impl Command {
    /// Static checks that need no engine state.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Command::Stimulus {
                sensor,
                value,
                waveform,
                no_echo,
            } => {
                if let Some(v) = value {
                    if !v.is_finite() {
                        return Err(format!("stimulus value {v} is not finite"));
                    }
                }
                match sensor {
                    SensorKind::Distance => {
                        if *no_echo && value.is_some() {
                            return Err("distance stimulus has both value and no_echo".into());
                        }
                    }
                    SensorKind::Microphone => {
                        if value.is_some() == waveform.is_some() {
                            return Err(
                                "microphone stimulus needs exactly one of value or waveform".into(),
                            );
                        }
                    }
                    _ if value.is_none() => {
                        return Err(format!("{sensor} stimulus needs a value"));
                    }
                    _ => {}
                }
                if waveform.is_some() && *sensor != SensorKind::Microphone {
                    return Err(format!("{sensor} does not take a waveform"));
                }
                Ok(())
            }
            Command::Rotate { cube, top } => {
                let spec: TopSpec = top.parse()?;
                match (cube, spec) {
                    (_, TopSpec::Face(_))
                    | (CubeRole::Sensor, TopSpec::Sensor(_))
                    | (CubeRole::Actuator, TopSpec::Actuator(_)) => Ok(()),
                    _ => Err(format!("`{top}` is not on the {cube} cube")),
                }
            }
            Command::SetLink { loss, .. } => {
                if (0.0..=1.0).contains(loss) {
                    Ok(())
                } else {
                    Err(format!("loss {loss} outside 0..=1"))
                }
            }
            _ => Ok(()),
        }
    }

    /// Parses a live-client message (`{"cmd": ...}`).
    pub fn from_client_json(text: &str) -> Result<Command, serde_json::Error> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        if let Some(obj) = value.as_object_mut() {
            if let Some(tag) = obj.remove("cmd") {
                obj.insert("event".into(), tag);
            }
        }
        serde_json::from_value(value)
    }
}

/// Microphone waveform for a stimulus given as a peak-to-peak amplitude.
pub fn tone_for_amplitude(peak_to_peak: f64) -> Waveform {
    Waveform::Sine {
        freq_hz: MIC_TONE_HZ,
        amplitude: peak_to_peak.clamp(0.0, 1023.0) / 2.0,
        dc: default_peak_to_peak_dc(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    pub t_ms: u64,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: timestamp {t_ms} is earlier than the previous event at {prev_ms}")]
    Unsorted {
        line: usize,
        t_ms: u64,
        prev_ms: u64,
    },
    #[error("line {line}: event after end")]
    AfterEnd { line: usize },
    #[error("scenario has no end event")]
    MissingEnd,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    v: u32,
}

pub fn parse_scenario(text: &str) -> Result<Vec<ScenarioEvent>, ScenarioError> {
    let mut events: Vec<ScenarioEvent> = Vec::new();
    let mut ended = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if events.is_empty() && !ended {
            if let Ok(h) = serde_json::from_str::<Header>(line) {
                if h.format != SCENARIO_FORMAT || h.v != 1 {
                    return Err(ScenarioError::Malformed {
                        line: line_no,
                        msg: format!("unsupported header {} v{}", h.format, h.v),
                    });
                }
                continue;
            }
        }
        if ended {
            return Err(ScenarioError::AfterEnd { line: line_no });
        }
        let ev: ScenarioEvent =
            serde_json::from_str(line).map_err(|e| ScenarioError::Malformed {
                line: line_no,
                msg: e.to_string(),
            })?;
        ev.command
            .validate()
            .map_err(|msg| ScenarioError::Malformed { line: line_no, msg })?;
        if let Some(prev) = events.last() {
            if ev.t_ms < prev.t_ms {
                return Err(ScenarioError::Unsorted {
                    line: line_no,
                    t_ms: ev.t_ms,
                    prev_ms: prev.t_ms,
                });
            }
        }
        ended = ev.command == Command::End;
        events.push(ev);
    }
    if !ended {
        return Err(ScenarioError::MissingEnd);
    }
    Ok(events)
}

pub fn load_scenario(path: &Path) -> Result<Vec<ScenarioEvent>, ScenarioError> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

pub fn scenario_to_jsonl(events: &[ScenarioEvent]) -> String {
    let mut out = format!("{{\"format\":\"{SCENARIO_FORMAT}\",\"v\":1}}\n");
    for ev in events {
        out.push_str(&serde_json::to_string(ev).expect("events serialize"));
        out.push('\n');
    }
    out
}
