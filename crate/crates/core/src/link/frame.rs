//! Ten-byte frame carrying one intermediate value between the cubes.
//!
//! | offset | size | field                                         |
//! |--------|------|-----------------------------------------------|
//! | 0      | 1    | magic `0x4C`                                  |
//! | 1      | 1    | version `0x01`                                |
//! | 2      | 2    | sequence number, little endian                |
//! | 4      | 1    | sensor wire id, 0..=5                         |
//! | 5      | 1    | value, 0..=24                                 |
//! | 6      | 2    | raw hint, little endian, `0xFFFF` = absent    |
//! | 8      | 1    | flags, bit 0 = custom mapping active          |
//! | 9      | 1    | XOR of bytes 0..=8                            |

use thiserror::Error;

use crate::model::{NormalizedValue, SensorKind, NORMALIZED_MAX};

pub const FRAME_LEN: usize = 10;
pub const MAGIC: u8 = 0x4C;
pub const VERSION: u8 = 0x01;
pub const HINT_ABSENT: u16 = 0xFFFF;
pub const FLAG_CUSTOM_MAPPING: u8 = 0x01;
const RESERVED_FLAGS: u8 = !FLAG_CUSTOM_MAPPING;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame is {0} bytes, expected 10")]
    BadLength(usize),
    #[error("bad magic byte {0:#04x}")]
    BadMagic(u8),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("checksum mismatch: frame says {stored:#04x}, computed {computed:#04x}")]
    BadChecksum { stored: u8, computed: u8 },
    #[error("sensor id {0} out of range")]
    BadSensorId(u8),
    #[error("value {0} out of range")]
    BadValue(u8),
    #[error("reserved flag bits set: {0:#04x}")]
    ReservedFlags(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frame {
    pub seq: u16,
    pub sensor_id: u8,
    pub value: u8,
    pub raw_hint: u16,
    pub flags: u8,
}

pub fn checksum(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0, |acc, b| acc ^ b)
}

impl Frame {
    pub fn new(v: NormalizedValue, seq: u16, raw_hint: Option<u16>, custom_mapping: bool) -> Self {
        Self {
            seq,
            sensor_id: v.sensor().wire_id(),
            value: v.value(),
            raw_hint: raw_hint.unwrap_or(HINT_ABSENT),
            flags: if custom_mapping {
                FLAG_CUSTOM_MAPPING
            } else {
                0
            },
        }
    }

    fn validate(&self) -> Result<(), FrameError> {
        if SensorKind::from_wire_id(self.sensor_id).is_none() {
            return Err(FrameError::BadSensorId(self.sensor_id));
        }
        if self.value > NORMALIZED_MAX {
            return Err(FrameError::BadValue(self.value));
        }
        if self.flags & RESERVED_FLAGS != 0 {
            return Err(FrameError::ReservedFlags(self.flags));
        }
        Ok(())
    }

    pub fn encode(&self) -> Result<[u8; FRAME_LEN], FrameError> {
        self.validate()?;
        let mut b = [0u8; FRAME_LEN];
        b[0] = MAGIC;
        b[1] = VERSION;
        b[2..4].copy_from_slice(&self.seq.to_le_bytes());
        b[4] = self.sensor_id;
        b[5] = self.value;
        b[6..8].copy_from_slice(&self.raw_hint.to_le_bytes());
        b[8] = self.flags;
        b[9] = checksum(&b[..9]);
        Ok(b)
    }

    pub fn decode(bytes: &[u8]) -> Result<Frame, FrameError> {
        let b: &[u8; FRAME_LEN] = bytes
            .try_into()
            .map_err(|_| FrameError::BadLength(bytes.len()))?;
        if b[0] != MAGIC {
            return Err(FrameError::BadMagic(b[0]));
        }
        if b[1] != VERSION {
            return Err(FrameError::BadVersion(b[1]));
        }
        let computed = checksum(&b[..9]);
        if computed != b[9] {
            return Err(FrameError::BadChecksum {
                stored: b[9],
                computed,
            });
        }
        let frame = Frame {
            seq: u16::from_le_bytes([b[2], b[3]]),
            sensor_id: b[4],
            value: b[5],
            raw_hint: u16::from_le_bytes([b[6], b[7]]),
            flags: b[8],
        };
        frame.validate()?;
        Ok(frame)
    }

    /// Only meaningful on frames that passed `decode` or `encode`.
    pub fn normalized(&self) -> Result<NormalizedValue, FrameError> {
        self.validate()?;
        let sensor = SensorKind::from_wire_id(self.sensor_id).expect("validated");
        Ok(NormalizedValue::new(self.value, sensor).expect("validated"))
    }

    pub fn raw_hint(&self) -> Option<u16> {
        (self.raw_hint != HINT_ABSENT).then_some(self.raw_hint)
    }

    pub fn custom_mapping(&self) -> bool {
        self.flags & FLAG_CUSTOM_MAPPING != 0
    }
}

/// Receiver-side ordering: accepts a sequence number only if it is newer
/// than the last accepted one within half the sequence space.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeqTracker {
    last: Option<u16>,
}

impl SeqTracker {
    pub fn accept(&mut self, seq: u16) -> bool {
        let fresh = match self.last {
            None => true,
            Some(last) => {
                let ahead = seq.wrapping_sub(last);
                ahead != 0 && ahead < 0x8000
            }
        };
        if fresh {
            self.last = Some(seq);
        }
        fresh
    }

    pub fn reset(&mut self) {
        self.last = None;
    }
}
