//! Actuator side: turns a received intermediate value into a command for the
//! actuator currently on top.

use serde::{Deserialize, Serialize};

use crate::model::{
    ActuationCommand, ActuatorKind, MidiEvent, NormalizedValue, Rgb, SensorKind, FAN_FLOOR,
    VIBRATION_FLOOR,
};

pub const DEFAULT_RING_BRIGHTNESS: u8 = 64;
pub const DEFAULT_VELOCITY: u8 = 100;
pub const NOTE_OFFSET: u8 = 50;

/// Ring color per originating sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorColorPalette {
    colors: [Rgb; 6],
}

impl SensorColorPalette {
    /// Rejects palettes where two sensors share a color.
    pub fn new(colors: [Rgb; 6]) -> Option<Self> {
        for i in 0..6 {
            if colors[i + 1..].contains(&colors[i]) {
                return None;
            }
        }
        Some(Self { colors })
    }

    pub fn color(&self, sensor: SensorKind) -> Rgb {
        self.colors[usize::from(sensor.wire_id())]
    }

    pub fn with_color(mut self, sensor: SensorKind, color: Rgb) -> Option<Self> {
        self.colors[usize::from(sensor.wire_id())] = color;
        Self::new(self.colors)
    }
}

impl Default for SensorColorPalette {
    fn default() -> Self {
        Self {
            colors: [
                Rgb(255, 255, 255), // potentiometer
                Rgb(255, 0, 0),     // thermometer
                Rgb(0, 255, 0),     // microphone
                Rgb(0, 0, 255),     // distance
                Rgb(255, 255, 0),   // pir
                Rgb(255, 128, 0),   // light
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeltierMode {
    /// 0..12 cools, 12..24 heats.
    #[default]
    Bipolar,
    HeatOnly,
}

impl std::str::FromStr for PeltierMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match crate::model::canonical(s).as_str() {
            "bipolar" => Ok(PeltierMode::Bipolar),
            "heat_only" | "heatonly" => Ok(PeltierMode::HeatOnly),
            _ => Err(format!("unknown peltier mode `{s}`")),
        }
    }
}

impl std::fmt::Display for PeltierMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PeltierMode::Bipolar => "bipolar",
            PeltierMode::HeatOnly => "heat_only",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActuatorSettings {
    pub palette: SensorColorPalette,
    pub ring_brightness: u8,
    pub velocity: u8,
    pub peltier_mode: PeltierMode,
}

impl Default for ActuatorSettings {
    fn default() -> Self {
        Self {
            palette: SensorColorPalette::default(),
            ring_brightness: DEFAULT_RING_BRIGHTNESS,
            velocity: DEFAULT_VELOCITY,
            peltier_mode: PeltierMode::Bipolar,
        }
    }
}

pub fn actuate_ring_graph(
    v: NormalizedValue,
    palette: &SensorColorPalette,
    brightness: u8,
) -> ActuationCommand {
    ActuationCommand::RingGraph {
        lit_count: v.value(),
        color: palette.color(v.sensor()),
        per_pixel_brightness: brightness,
    }
}

pub fn actuate_power_led(v: NormalizedValue) -> ActuationCommand {
    let k = f64::from(v.value());
    ActuationCommand::PowerLed {
        brightness: (k * k * 255.0 / 576.0).round() as u8,
    }
}

/// Note held by the sound actuator between deliveries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NoteContext {
    pub current: Option<u8>,
}

/// Sound events for a new target note (`None` = silence). Retriggers only
/// when the note changes.
pub fn sound_transition(
    target: Option<u8>,
    velocity: u8,
    ctx: &mut NoteContext,
) -> ActuationCommand {
    let mut events = Vec::new();
    if target != ctx.current {
        if let Some(prev) = ctx.current {
            events.push(MidiEvent::NoteOff { note: prev });
        }
        if let Some(note) = target {
            events.push(MidiEvent::NoteOn {
                note,
                velocity: velocity.min(127),
            });
        }
        ctx.current = target;
    }
    ActuationCommand::Sound {
        events,
        sounding: ctx.current,
    }
}

pub fn actuate_sound(v: NormalizedValue, velocity: u8, ctx: &mut NoteContext) -> ActuationCommand {
    let target = match v.value() {
        0 => None,
        k => Some(k + NOTE_OFFSET),
    };
    sound_transition(target, velocity, ctx)
}

pub fn actuate_peltier(v: NormalizedValue, mode: PeltierMode) -> ActuationCommand {
    let k = f64::from(v.value());
    let pwm = match mode {
        PeltierMode::Bipolar => ((k - 12.0) * 255.0 / 12.0).round(),
        PeltierMode::HeatOnly => (k * 255.0 / 24.0).round(),
    };
    ActuationCommand::Peltier { pwm: pwm as i16 }
}

fn floored_pwm(k: u8, floor: u8) -> u8 {
    if k == 0 {
        return 0;
    }
    let span = f64::from(255 - floor);
    (f64::from(floor) + f64::from(k - 1) * span / 23.0).round() as u8
}

pub fn actuate_vibration(v: NormalizedValue) -> ActuationCommand {
    ActuationCommand::Vibration {
        pwm: floored_pwm(v.value(), VIBRATION_FLOOR),
    }
}

pub fn actuate_fan(v: NormalizedValue) -> ActuationCommand {
    ActuationCommand::Fan {
        pwm: floored_pwm(v.value(), FAN_FLOOR),
    }
}

/// Routes a value to the active actuator's stock mapping. Any sensor may feed
/// any actuator.
pub fn dispatch(
    v: NormalizedValue,
    active: ActuatorKind,
    settings: &ActuatorSettings,
    notes: &mut NoteContext,
) -> ActuationCommand {
    match active {
        ActuatorKind::RingGraph => {
            actuate_ring_graph(v, &settings.palette, settings.ring_brightness)
        }
        ActuatorKind::PowerLed => actuate_power_led(v),
        ActuatorKind::Sound => actuate_sound(v, settings.velocity, notes),
        ActuatorKind::Peltier => actuate_peltier(v, settings.peltier_mode),
        ActuatorKind::Vibration => actuate_vibration(v),
        ActuatorKind::Fan => actuate_fan(v),
    }
}

/// Safe resting output: everything off, Peltier undriven in either mode.
pub fn neutral_command(
    active: ActuatorKind,
    last_sensor: SensorKind,
    settings: &ActuatorSettings,
    notes: &mut NoteContext,
) -> ActuationCommand {
    match active {
        ActuatorKind::Peltier => ActuationCommand::Peltier { pwm: 0 },
        ActuatorKind::Sound => sound_transition(None, settings.velocity, notes),
        _ => {
            let zero = NormalizedValue::new(0, last_sensor).expect("0 is in range");
            dispatch(zero, active, settings, notes)
        }
    }
}

/// Builds a command from a scalar produced by a custom actuator mapping.
/// Values are saturated to the actuator's hardware bounds.
pub fn command_from_scalar(
    out: i64,
    active: ActuatorKind,
    sensor: SensorKind,
    settings: &ActuatorSettings,
    notes: &mut NoteContext,
) -> ActuationCommand {
    let byte = out.clamp(0, 255) as u8;
    match active {
        ActuatorKind::RingGraph => ActuationCommand::RingGraph {
            lit_count: out.clamp(0, 24) as u8,
            color: settings.palette.color(sensor),
            per_pixel_brightness: settings.ring_brightness,
        },
        ActuatorKind::PowerLed => ActuationCommand::PowerLed { brightness: byte },
        ActuatorKind::Sound => {
            let target = if out <= 0 {
                None
            } else {
                Some(out.min(127) as u8)
            };
            sound_transition(target, settings.velocity, notes)
        }
        ActuatorKind::Peltier => ActuationCommand::Peltier {
            pwm: out.clamp(-255, 255) as i16,
        },
        ActuatorKind::Vibration => ActuationCommand::Vibration { pwm: byte },
        ActuatorKind::Fan => ActuationCommand::Fan { pwm: byte },
    }
}

/// Scalar view of a command, the quantity a custom mapping would produce.
pub fn command_scalar(cmd: &ActuationCommand) -> i64 {
    match cmd {
        ActuationCommand::RingGraph { lit_count, .. } => i64::from(*lit_count),
        ActuationCommand::PowerLed { brightness } => i64::from(*brightness),
        ActuationCommand::Sound { sounding, .. } => sounding.map_or(0, i64::from),
        ActuationCommand::Peltier { pwm } => i64::from(*pwm),
        ActuationCommand::Vibration { pwm } | ActuationCommand::Fan { pwm } => i64::from(*pwm),
    }
}
