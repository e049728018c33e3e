//! Simulator configuration, read from a TOML file.
//!
//! ```toml
//! peltier_mode = "bipolar"      # or "heat_only"
//! ring_brightness = 64
//! velocity = 100
//!
//! [sensor_faces]
//! pos_z = "thermometer"
//! neg_z = "pir"
//!
//! [actuator_faces]
//! pos_z = "power_led"
//! neg_x = "ring_graph"
//!
//! [palette]
//! thermometer = "#ff0000"
//!
//! [sampling]
//! light = 100                   # period in ms
//! mic_window_ms = 50
//! mic_rate_hz = 8000
//! ```
//!
//! Every key is optional. Face tables override single faces of the default
//! layout and the result must still mount each kind exactly once.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::actuator::{ActuatorSettings, PeltierMode};
use crate::model::{ActuatorKind, CubeKind, Face, FaceAssignment, Rgb, SensorKind};
use crate::sensor::SamplingConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimConfig {
    pub sensor_faces: FaceAssignment<SensorKind>,
    pub actuator_faces: FaceAssignment<ActuatorKind>,
    pub actuator: ActuatorSettings,
    pub sampling: SamplingConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    peltier_mode: Option<String>,
    ring_brightness: Option<u8>,
    velocity: Option<u8>,
    #[serde(default)]
    sensor_faces: BTreeMap<String, String>,
    #[serde(default)]
    actuator_faces: BTreeMap<String, String>,
    #[serde(default)]
    palette: BTreeMap<String, String>,
    #[serde(default)]
    sampling: BTreeMap<String, u64>,
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn overlay<K: CubeKind>(
    base: &FaceAssignment<K>,
    table: &BTreeMap<String, String>,
) -> Result<FaceAssignment<K>, ConfigError> {
    let mut by_face: Vec<(Face, K)> = base.pairs().collect();
    for (face, kind) in table {
        let face: Face = face.parse().map_err(|e| invalid(format!("{e}")))?;
        let kind =
            K::from_name(kind).ok_or_else(|| invalid(format!("unknown {} `{kind}`", K::WHAT)))?;
        by_face[face.index()].1 = kind;
    }
    FaceAssignment::from_pairs(&by_face).map_err(|e| invalid(e.to_string()))
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let mut cfg = SimConfig::default();

        if let Some(mode) = raw.peltier_mode {
            cfg.actuator.peltier_mode = mode.parse::<PeltierMode>().map_err(invalid)?;
        }
        if let Some(b) = raw.ring_brightness {
            cfg.actuator.ring_brightness = b;
        }
        if let Some(v) = raw.velocity {
            if v > 127 {
                return Err(invalid(format!("velocity {v} exceeds 127")));
            }
            cfg.actuator.velocity = v;
        }
        cfg.sensor_faces = overlay(&cfg.sensor_faces, &raw.sensor_faces)?;
        cfg.actuator_faces = overlay(&cfg.actuator_faces, &raw.actuator_faces)?;

        for (sensor, color) in &raw.palette {
            let sensor: SensorKind = sensor.parse().map_err(|e| invalid(format!("{e}")))?;
            let color: Rgb = color.parse().map_err(|e| invalid(format!("{e}")))?;
            cfg.actuator.palette = cfg
                .actuator
                .palette
                .with_color(sensor, color)
                .ok_or_else(|| invalid(format!("palette color {color} is used twice")))?;
        }

        for (key, value) in &raw.sampling {
            match key.as_str() {
                "mic_window_ms" => cfg.sampling.mic_window_ms = *value,
                "mic_rate_hz" => {
                    cfg.sampling.mic_rate_hz =
                        u32::try_from(*value).map_err(|_| invalid("mic_rate_hz too large"))?
                }
                name => {
                    let sensor = SensorKind::from_name(name)
                        .ok_or_else(|| invalid(format!("unknown sampling key `{name}`")))?;
                    cfg.sampling.period_ms[usize::from(sensor.wire_id())] = *value;
                }
            }
        }
        if cfg.sampling.period_ms.contains(&0) {
            return Err(invalid("sampling periods must be positive"));
        }
        if cfg.sampling.mic_window_ms == 0 || cfg.sampling.mic_rate_hz == 0 {
            return Err(invalid("microphone window and rate must be positive"));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}
