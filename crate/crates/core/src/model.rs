//! Shared vocabulary for both cubes: sensor and actuator kinds, faces,
//! orientation, the 0..24 intermediate value and the actuation commands.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest intermediate value a sensor reading can normalize to.
pub const NORMALIZED_MAX: u8 = 24;

/// Dot-product margin a challenger face must win by before the top face
/// switches away from the incumbent.
pub const FACE_HYSTERESIS: f64 = 0.05;

const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("normalized value {0} is outside 0..=24")]
    ValueOutOfRange(i64),
    #[error("orientation vector ({0}, {1}, {2}) is not unit length")]
    InvalidOrientation(f64, f64, f64),
    #[error("face assignment is not a bijection: {0}")]
    NotBijective(String),
    #[error("unknown {what} `{name}`")]
    UnknownName { what: &'static str, name: String },
}

/// Human sense a sensor or actuator addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HumanSense {
    Sight,
    Hearing,
    Touch,
    Temperature,
}

/// Closed interval of a sensor's raw reading, with its unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawDomain {
    pub min: f64,
    pub max: f64,
    pub unit: &'static str,
}

impl RawDomain {
    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.min, self.max)
    }
}

/// Common surface of the two kind enums so faces can be assigned generically.
pub trait CubeKind: Copy + Eq + fmt::Debug + fmt::Display + 'static {
    const ALL: [Self; 6];
    const WHAT: &'static str;

    fn name(self) -> &'static str;

    fn from_name(name: &str) -> Option<Self> {
        let wanted = canonical(name);
        Self::ALL.into_iter().find(|k| k.name() == wanted)
    }
}

/// Lowercases and turns `-` and spaces into `_`, so `Power-LED` matches `power_led`.
pub(crate) fn canonical(name: &str) -> String {
    name.trim()
        .chars()
        .map(|c| match c {
            '-' | ' ' => '_',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Potentiometer,
    Thermometer,
    Microphone,
    Distance,
    Pir,
    Light,
}

impl SensorKind {
    pub fn wire_id(self) -> u8 {
        match self {
            SensorKind::Potentiometer => 0,
            SensorKind::Thermometer => 1,
            SensorKind::Microphone => 2,
            SensorKind::Distance => 3,
            SensorKind::Pir => 4,
            SensorKind::Light => 5,
        }
    }

    pub fn from_wire_id(id: u8) -> Option<Self> {
        Self::ALL.get(usize::from(id)).copied()
    }

    pub fn human_sense(self) -> HumanSense {
        match self {
            SensorKind::Potentiometer => HumanSense::Touch,
            SensorKind::Thermometer => HumanSense::Temperature,
            SensorKind::Microphone => HumanSense::Hearing,
            SensorKind::Distance | SensorKind::Pir | SensorKind::Light => HumanSense::Sight,
        }
    }

    /// Domain of the scalar that enters normalization. The microphone's is
    /// the per-sample AD range; its window amplitude shares the same bounds.
    pub fn raw_domain(self) -> RawDomain {
        let (min, max, unit) = match self {
            SensorKind::Potentiometer => (0.0, 1023.0, "AD counts"),
            SensorKind::Thermometer => (0.0, 50.0, "°C"),
            SensorKind::Microphone => (0.0, 1023.0, "AD counts"),
            SensorKind::Distance => (0.0, 72.0, "cm"),
            SensorKind::Pir => (0.0, 1.0, "binary"),
            SensorKind::Light => (0.0, 65535.0, "lx"),
        };
        RawDomain { min, max, unit }
    }
}

impl CubeKind for SensorKind {
    const ALL: [Self; 6] = [
        SensorKind::Potentiometer,
        SensorKind::Thermometer,
        SensorKind::Microphone,
        SensorKind::Distance,
        SensorKind::Pir,
        SensorKind::Light,
    ];
    const WHAT: &'static str = "sensor";

    fn name(self) -> &'static str {
        match self {
            SensorKind::Potentiometer => "potentiometer",
            SensorKind::Thermometer => "thermometer",
            SensorKind::Microphone => "microphone",
            SensorKind::Distance => "distance",
            SensorKind::Pir => "pir",
            SensorKind::Light => "light",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuatorKind {
    RingGraph,
    PowerLed,
    Sound,
    Peltier,
    Vibration,
    Fan,
}

impl ActuatorKind {
    /// Senses the actuator stimulates, primary one first. Vibration and fan
    /// are also audible as a side effect; the fan cools the skin too.
    pub fn human_senses(self) -> &'static [HumanSense] {
        use HumanSense::*;
        match self {
            ActuatorKind::RingGraph | ActuatorKind::PowerLed => &[Sight],
            ActuatorKind::Sound => &[Hearing],
            ActuatorKind::Peltier => &[Temperature],
            ActuatorKind::Vibration => &[Touch, Hearing],
            ActuatorKind::Fan => &[Touch, Temperature, Hearing],
        }
    }

    pub fn output_domain(self) -> &'static str {
        match self {
            ActuatorKind::RingGraph => "0..24 lit pixels, colored by sensor",
            ActuatorKind::PowerLed => "0..255 brightness",
            ActuatorKind::Sound => "MIDI note on/off, notes 51..74",
            ActuatorKind::Peltier => "-255..255 signed PWM (cool..heat)",
            ActuatorKind::Vibration => "0 or 64..255 PWM",
            ActuatorKind::Fan => "0 or 160..255 PWM",
        }
    }
}

impl CubeKind for ActuatorKind {
    const ALL: [Self; 6] = [
        ActuatorKind::RingGraph,
        ActuatorKind::PowerLed,
        ActuatorKind::Sound,
        ActuatorKind::Peltier,
        ActuatorKind::Vibration,
        ActuatorKind::Fan,
    ];
    const WHAT: &'static str = "actuator";

    fn name(self) -> &'static str {
        match self {
            ActuatorKind::RingGraph => "ring_graph",
            ActuatorKind::PowerLed => "power_led",
            ActuatorKind::Sound => "sound",
            ActuatorKind::Peltier => "peltier",
            ActuatorKind::Vibration => "vibration",
            ActuatorKind::Fan => "fan",
        }
    }
}

macro_rules! name_traits {
    ($($ty:ty),*) => {$(
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = ModelError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                <$ty>::from_name(s).ok_or_else(|| ModelError::UnknownName {
                    what: <$ty>::WHAT,
                    name: s.to_string(),
                })
            }
        }
    )*};
}

name_traits!(SensorKind, ActuatorKind, Face);

/// The intermediate value carried between the cubes, tagged with the sensor
/// that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormalizedValue {
    value: u8,
    sensor: SensorKind,
}

impl NormalizedValue {
    pub fn new(value: u8, sensor: SensorKind) -> Result<Self, ModelError> {
        if value > NORMALIZED_MAX {
            return Err(ModelError::ValueOutOfRange(i64::from(value)));
        }
        Ok(Self { value, sensor })
    }

    /// Saturates into 0..=24. Returns the value and whether clamping happened.
    pub fn saturating(value: i64, sensor: SensorKind) -> (Self, bool) {
        let clamped = value.clamp(0, i64::from(NORMALIZED_MAX));
        (
            Self {
                value: clamped as u8,
                sensor,
            },
            clamped != value,
        )
    }

    pub fn value(self) -> u8 {
        self.value
    }

    pub fn sensor(self) -> SensorKind {
        self.sensor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl Face {
    /// Tie-break order as well as iteration order.
    pub const ALL: [Face; 6] = [
        Face::PosX,
        Face::NegX,
        Face::PosY,
        Face::NegY,
        Face::PosZ,
        Face::NegZ,
    ];

    pub fn normal(self) -> [f64; 3] {
        match self {
            Face::PosX => [1.0, 0.0, 0.0],
            Face::NegX => [-1.0, 0.0, 0.0],
            Face::PosY => [0.0, 1.0, 0.0],
            Face::NegY => [0.0, -1.0, 0.0],
            Face::PosZ => [0.0, 0.0, 1.0],
            Face::NegZ => [0.0, 0.0, -1.0],
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::PosX => "pos_x",
            Face::NegX => "neg_x",
            Face::PosY => "pos_y",
            Face::NegY => "neg_y",
            Face::PosZ => "pos_z",
            Face::NegZ => "neg_z",
        }
    }

    fn from_name(name: &str) -> Option<Face> {
        let wanted = canonical(name);
        Face::ALL.into_iter().find(|f| f.name() == wanted)
    }
}

impl Face {
    const WHAT: &'static str = "face";
}

/// World-up expressed in the cube's body frame, as an accelerometer at rest
/// would report it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubeOrientation {
    up_body: [f64; 3],
}

impl CubeOrientation {
    pub fn new(up_body: [f64; 3]) -> Result<Self, ModelError> {
        let [x, y, z] = up_body;
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(ModelError::InvalidOrientation(x, y, z));
        }
        Ok(Self { up_body })
    }

    /// Resting pose with `face` pointing straight up.
    pub fn resting_on(face: Face) -> Self {
        Self {
            up_body: face.normal(),
        }
    }

    pub fn up_body(&self) -> [f64; 3] {
        self.up_body
    }

    pub fn dot(&self, face: Face) -> f64 {
        let n = face.normal();
        n[0] * self.up_body[0] + n[1] * self.up_body[1] + n[2] * self.up_body[2]
    }
}

/// Picks the top face. A previous face is kept until a challenger beats it by
/// at least [`FACE_HYSTERESIS`].
pub fn face_from_orientation(o: &CubeOrientation, previous: Option<Face>) -> Face {
    let mut winner = Face::ALL[0];
    let mut best = o.dot(winner);
    for face in &Face::ALL[1..] {
        let d = o.dot(*face);
        if d > best {
            winner = *face;
            best = d;
        }
    }
    match previous {
        Some(incumbent) if incumbent != winner && best - o.dot(incumbent) < FACE_HYSTERESIS => {
            incumbent
        }
        _ => winner,
    }
}

/// Fixed mounting of six kinds on the six faces of one cube.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceAssignment<K: CubeKind> {
    by_face: [K; 6],
}

impl<K: CubeKind> FaceAssignment<K> {
    /// `by_face[i]` is the kind mounted on `Face::ALL[i]`.
    pub fn new(by_face: [K; 6]) -> Result<Self, ModelError> {
        for kind in K::ALL {
            let count = by_face.iter().filter(|k| **k == kind).count();
            if count != 1 {
                return Err(ModelError::NotBijective(format!(
                    "{} `{}` mounted on {} faces",
                    K::WHAT,
                    kind,
                    count
                )));
            }
        }
        Ok(Self { by_face })
    }

    pub fn from_pairs(pairs: &[(Face, K)]) -> Result<Self, ModelError> {
        let mut slots: [Option<K>; 6] = [None; 6];
        for (face, kind) in pairs {
            if slots[face.index()].replace(*kind).is_some() {
                return Err(ModelError::NotBijective(format!(
                    "face {face} assigned twice"
                )));
            }
        }
        let mut by_face = [K::ALL[0]; 6];
        for (i, slot) in slots.iter().enumerate() {
            by_face[i] = slot.ok_or_else(|| {
                ModelError::NotBijective(format!("face {} has no {}", Face::ALL[i], K::WHAT))
            })?;
        }
        Self::new(by_face)
    }

    pub fn active_kind(&self, face: Face) -> K {
        self.by_face[face.index()]
    }

    pub fn face_of(&self, kind: K) -> Face {
        let i = self
            .by_face
            .iter()
            .position(|k| *k == kind)
            .expect("bijective assignment holds every kind");
        Face::ALL[i]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Face, K)> + '_ {
        Face::ALL.into_iter().zip(self.by_face.iter().copied())
    }
}

impl Default for FaceAssignment<SensorKind> {
    fn default() -> Self {
        Self::new(SensorKind::ALL).expect("ALL is a permutation")
    }
}

impl Default for FaceAssignment<ActuatorKind> {
    fn default() -> Self {
        Self::new(ActuatorKind::ALL).expect("ALL is a permutation")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

impl FromStr for Rgb {
    type Err = ModelError;

    /// Accepts `#rrggbb` or `r,g,b`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::UnknownName {
            what: "color",
            name: s.to_string(),
        };
        let s = s.trim();
        if let Some(hex) = s.strip_prefix('#') {
            if hex.len() != 6 || !hex.is_ascii() {
                return Err(bad());
            }
            let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad());
            return Ok(Rgb(byte(0)?, byte(2)?, byte(4)?));
        }
        let parts: Vec<_> = s.split(',').map(|p| p.trim().parse::<u8>()).collect();
        match parts.as_slice() {
            [Ok(r), Ok(g), Ok(b)] => Ok(Rgb(*r, *g, *b)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MidiEvent {
    NoteOn { note: u8, velocity: u8 },
    NoteOff { note: u8 },
}

/// One output command for the active actuator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "actuator", rename_all = "snake_case")]
pub enum ActuationCommand {
    RingGraph {
        lit_count: u8,
        color: Rgb,
        per_pixel_brightness: u8,
    },
    PowerLed {
        brightness: u8,
    },
    /// `events` are emitted this step; `sounding` is the note held afterwards.
    Sound {
        events: Vec<MidiEvent>,
        sounding: Option<u8>,
    },
    Peltier {
        pwm: i16,
    },
    Vibration {
        pwm: u8,
    },
    Fan {
        pwm: u8,
    },
}

pub const RING_PIXELS: u8 = 24;
pub const VIBRATION_FLOOR: u8 = 64;
pub const FAN_FLOOR: u8 = 160;

impl ActuationCommand {
    pub fn kind(&self) -> ActuatorKind {
        match self {
            ActuationCommand::RingGraph { .. } => ActuatorKind::RingGraph,
            ActuationCommand::PowerLed { .. } => ActuatorKind::PowerLed,
            ActuationCommand::Sound { .. } => ActuatorKind::Sound,
            ActuationCommand::Peltier { .. } => ActuatorKind::Peltier,
            ActuationCommand::Vibration { .. } => ActuatorKind::Vibration,
            ActuationCommand::Fan { .. } => ActuatorKind::Fan,
        }
    }

    /// Hardware bounds every command must respect, custom mappings included.
    pub fn within_bounds(&self) -> bool {
        match self {
            ActuationCommand::RingGraph { lit_count, .. } => *lit_count <= RING_PIXELS,
            ActuationCommand::Sound { events, sounding } => {
                sounding.is_none_or(|n| n <= 127)
                    && events.iter().all(|e| match e {
                        MidiEvent::NoteOn { note, velocity } => *note <= 127 && *velocity <= 127,
                        MidiEvent::NoteOff { note } => *note <= 127,
                    })
            }
            ActuationCommand::Peltier { pwm } => (-255..=255).contains(pwm),
            // u8 already bounds the remaining variants to 0..=255.
            _ => true,
        }
    }

    /// Bounds of the stock mapping table: hardware bounds plus the motor
    /// start-up floors for vibration and fan.
    pub fn within_table_ranges(&self) -> bool {
        self.within_bounds()
            && match self {
                ActuationCommand::Vibration { pwm } => *pwm == 0 || *pwm >= VIBRATION_FLOOR,
                ActuationCommand::Fan { pwm } => *pwm == 0 || *pwm >= FAN_FLOOR,
                _ => true,
            }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn up(x: f64, y: f64, z: f64) -> CubeOrientation {
        CubeOrientation::new([x, y, z]).unwrap()
    }

    #[test]
    fn axis_aligned_faces() {
        assert_eq!(face_from_orientation(&up(0.0, 0.0, 1.0), None), Face::PosZ);
        assert_eq!(face_from_orientation(&up(0.0, 0.0, -1.0), None), Face::NegZ);
        for face in Face::ALL {
            let o = CubeOrientation::resting_on(face);
            assert_eq!(face_from_orientation(&o, None), face);
        }
    }

    #[test]
    fn hysteresis_keeps_incumbent_near_edge() {
        // Normalize so the vector is unit within 1e-6; dots stay 0.7082 vs 0.7060.
        let (x, y) = (0.7082_f64, 0.7060_f64);
        let n = (x * x + y * y).sqrt();
        let o = up(x / n, y / n, 0.0);
        assert_eq!(face_from_orientation(&o, None), Face::PosX);
        assert_eq!(face_from_orientation(&o, Some(Face::PosY)), Face::PosY);
    }

    #[test]
    fn hysteresis_releases_past_margin() {
        let a = 30f64.to_radians();
        let o = up(a.cos(), a.sin(), 0.0);
        // cos 30° - sin 30° = 0.366 > 0.05
        assert_eq!(face_from_orientation(&o, Some(Face::PosY)), Face::PosX);
    }

    #[test]
    fn ties_follow_face_order() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(face_from_orientation(&up(h, h, 0.0), None), Face::PosX);
        assert_eq!(face_from_orientation(&up(0.0, -h, -h), None), Face::NegY);
    }

    #[test]
    fn rejects_non_unit_orientation() {
        assert!(matches!(
            CubeOrientation::new([0.0, 0.0, 2.0]),
            Err(ModelError::InvalidOrientation(..))
        ));
        assert!(CubeOrientation::new([f64::NAN, 0.0, 1.0]).is_err());
        assert!(CubeOrientation::new([0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn kind_metadata() {
        let mut ids: Vec<u8> = SensorKind::ALL.iter().map(|s| s.wire_id()).collect();
        ids.sort();
        assert_eq!(ids, vec![0, 1, 2, 3, 4, 5]);
        for s in SensorKind::ALL {
            assert_eq!(SensorKind::from_wire_id(s.wire_id()), Some(s));
        }
        assert_eq!(SensorKind::from_wire_id(6), None);
        assert_eq!(SensorKind::Potentiometer.human_sense(), HumanSense::Touch);
        assert_eq!(
            SensorKind::Thermometer.human_sense(),
            HumanSense::Temperature
        );
        assert_eq!(SensorKind::Microphone.human_sense(), HumanSense::Hearing);
        for s in [SensorKind::Distance, SensorKind::Pir, SensorKind::Light] {
            assert_eq!(s.human_sense(), HumanSense::Sight);
        }
        assert_eq!(
            ActuatorKind::Peltier.human_senses()[0],
            HumanSense::Temperature
        );
        assert_eq!(ActuatorKind::Fan.human_senses()[0], HumanSense::Touch);
    }

    #[test]
    fn names_round_trip() {
        for s in SensorKind::ALL {
            assert_eq!(s.to_string().parse::<SensorKind>().unwrap(), s);
        }
        for a in ActuatorKind::ALL {
            assert_eq!(a.to_string().parse::<ActuatorKind>().unwrap(), a);
        }
        assert_eq!(
            "Power-LED".parse::<ActuatorKind>().unwrap(),
            ActuatorKind::PowerLed
        );
        assert_eq!("pos-z".parse::<Face>().unwrap(), Face::PosZ);
        assert!("fan".parse::<SensorKind>().is_err());
    }

    #[test]
    fn active_kind_lookup() {
        let sensors = FaceAssignment::<SensorKind>::default();
        assert_eq!(sensors.active_kind(Face::PosZ), SensorKind::Pir);
        let actuators = FaceAssignment::<ActuatorKind>::default();
        assert_eq!(actuators.active_kind(Face::NegX), ActuatorKind::PowerLed);
        assert_eq!(actuators.face_of(ActuatorKind::Fan), Face::NegZ);
    }

    #[test]
    fn assignment_must_be_bijective() {
        use SensorKind::*;
        let dup = [
            Potentiometer,
            Potentiometer,
            Microphone,
            Distance,
            Pir,
            Light,
        ];
        assert!(matches!(
            FaceAssignment::new(dup),
            Err(ModelError::NotBijective(_))
        ));
        let missing = [
            (Face::PosX, Potentiometer),
            (Face::NegX, Thermometer),
            (Face::PosY, Microphone),
            (Face::NegY, Distance),
            (Face::PosZ, Pir),
        ];
        assert!(FaceAssignment::from_pairs(&missing).is_err());
    }

    #[test]
    fn normalized_value_bounds() {
        assert!(NormalizedValue::new(24, SensorKind::Light).is_ok());
        assert_eq!(
            NormalizedValue::new(25, SensorKind::Light),
            Err(ModelError::ValueOutOfRange(25))
        );
        let (v, clamped) = NormalizedValue::saturating(40, SensorKind::Pir);
        assert_eq!((v.value(), clamped), (24, true));
        let (v, clamped) = NormalizedValue::saturating(-3, SensorKind::Pir);
        assert_eq!((v.value(), clamped), (0, true));
    }

    #[test]
    fn rgb_parsing() {
        assert_eq!("#ff8000".parse::<Rgb>().unwrap(), Rgb(255, 128, 0));
        assert_eq!("1, 2,3".parse::<Rgb>().unwrap(), Rgb(1, 2, 3));
        assert!("#12345".parse::<Rgb>().is_err());
        assert_eq!(Rgb(255, 128, 0).to_string(), "#ff8000");
    }
}
