use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{parse, MappingProgram};
use crate::actuator::PeltierMode;
use crate::model::{canonical, ActuatorKind, CubeKind, ModelError, SensorKind};

/// Which mapping a program replaces: a sensor's normalization or an
/// actuator's output mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MappingTarget {
    Sensor(SensorKind),
    Actuator(ActuatorKind),
}

impl MappingTarget {
    pub fn all() -> impl Iterator<Item = MappingTarget> {
        SensorKind::ALL
            .into_iter()
            .map(MappingTarget::Sensor)
            .chain(ActuatorKind::ALL.into_iter().map(MappingTarget::Actuator))
    }
}

impl fmt::Display for MappingTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MappingTarget::Sensor(s) => write!(f, "sensor:{s}"),
            MappingTarget::Actuator(a) => write!(f, "actuator:{a}"),
        }
    }
}

impl MappingTarget {
    /// `(lo, hi, step)` of the inputs a mapping for this target must cover:
    /// the raw domain (thermometer in 0.1 °C steps) or the intermediate
    /// values 0..24.
    pub fn input_domain(self) -> (f64, f64, f64) {
        match self {
            MappingTarget::Sensor(s) => {
                let d = s.raw_domain();
                let step = if s == SensorKind::Thermometer {
                    0.1
                } else {
                    1.0
                };
                (d.min, d.max, step)
            }
            MappingTarget::Actuator(_) => (0.0, 24.0, 1.0),
        }
    }
}

impl FromStr for MappingTarget {
    type Err = ModelError;

    /// Accepts `sensor:light`, `actuator:fan`, or a bare kind name; the
    /// sensor and actuator names do not overlap.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || ModelError::UnknownName {
            what: "mapping target",
            name: s.to_string(),
        };
        match s.split_once(':') {
            Some((cube, kind)) => match canonical(cube).as_str() {
                "sensor" => kind.parse().map(MappingTarget::Sensor),
                "actuator" => kind.parse().map(MappingTarget::Actuator),
                _ => Err(unknown()),
            },
            None => SensorKind::from_name(s)
                .map(MappingTarget::Sensor)
                .or_else(|| ActuatorKind::from_name(s).map(MappingTarget::Actuator))
                .ok_or_else(unknown),
        }
    }
}

impl TryFrom<String> for MappingTarget {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<MappingTarget> for String {
    fn from(t: MappingTarget) -> String {
        t.to_string()
    }
}

/// Source text of the stock mapping. The microphone program maps the
/// window's peak-to-peak amplitude.
pub fn default_text(target: MappingTarget, mode: PeltierMode) -> &'static str {
    match target {
        MappingTarget::Sensor(s) => match s {
            SensorKind::Potentiometer => "0..1023 => lin(0..1023 -> 0..24)",
            SensorKind::Thermometer => "0..50 => lin(0..50 -> 0..24)",
            SensorKind::Microphone => "0..1023 => lin(0..1023 -> 0..24)",
            SensorKind::Distance => {
                "0..0.5 => const(0); 0.5..72 => clamp(1, 72) |> lin(1..72 -> 1..24)"
            }
            SensorKind::Pir => "0 => const(0); 1..1 => const(24)",
            SensorKind::Light => "0..65535 => sqrt |> clamp(0, 256) |> lin(0..256 -> 0..24)",
        },
        MappingTarget::Actuator(a) => match a {
            ActuatorKind::RingGraph => "0..24 => lin(0..24 -> 0..24)",
            ActuatorKind::PowerLed => "0..24 => sq |> lin(0..576 -> 0..255)",
            ActuatorKind::Sound => "0 => const(0); 1..24 => lin(1..24 -> 51..74)",
            ActuatorKind::Peltier => match mode {
                PeltierMode::Bipolar => "0..24 => lin(0..24 -> -255..255)",
                PeltierMode::HeatOnly => "0..24 => lin(0..24 -> 0..255)",
            },
            ActuatorKind::Vibration => "0 => const(0); 1..24 => lin(1..24 -> 64..255)",
            ActuatorKind::Fan => "0 => const(0); 1..24 => lin(1..24 -> 160..255)",
        },
    }
}

pub fn default_program(target: MappingTarget, mode: PeltierMode) -> MappingProgram {
    parse(default_text(target, mode)).expect("stock mapping text parses")
}
