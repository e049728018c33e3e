//! Sensor side: raw readings, stimulus state and normalization to 0..24.
//!
//! Every normalization clamps its input to the sensor's raw domain first and
//! rounds half away from zero (`f64::round`).

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{NormalizedValue, SensorKind};

pub const AD_MAX: f64 = 1023.0;
pub const POT_SWEEP_DEG: f64 = 270.0;
pub const TEMP_MAX_C: f64 = 50.0;
pub const DISTANCE_MAX_CM: f64 = 72.0;
pub const LUX_MAX: f64 = 65535.0;
const SQRT_LUX_FULL_SCALE: f64 = 256.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SensorError {
    #[error("microphone window is empty")]
    EmptyWindow,
}

fn to_normalized(x: f64) -> u8 {
    // Inputs are clamped upstream, so the rounded value is already in 0..=24.
    x.round().clamp(0.0, 24.0) as u8
}

pub fn pot_angle_to_ad(deg: f64) -> f64 {
    (deg.clamp(0.0, POT_SWEEP_DEG) * AD_MAX / POT_SWEEP_DEG).round()
}

pub fn normalize_potentiometer(ad: f64) -> u8 {
    let ad = ad.clamp(0.0, AD_MAX);
    to_normalized(ad * 24.0 / AD_MAX)
}

pub fn normalize_thermometer(t_c: f64) -> u8 {
    let t = t_c.clamp(0.0, TEMP_MAX_C);
    to_normalized(t * 24.0 / TEMP_MAX_C)
}

/// Peak-to-peak amplitude of a window of AD samples, each clamped to 0..1023.
pub fn window_amplitude(window: &[u16]) -> Result<u16, SensorError> {
    let mut it = window.iter().map(|s| (*s).min(AD_MAX as u16));
    let first = it.next().ok_or(SensorError::EmptyWindow)?;
    let (lo, hi) = it.fold((first, first), |(lo, hi), s| (lo.min(s), hi.max(s)));
    Ok(hi - lo)
}

pub fn normalize_mic_amplitude(amp: f64) -> u8 {
    let amp = amp.clamp(0.0, AD_MAX);
    to_normalized(amp * 24.0 / AD_MAX)
}

pub fn normalize_microphone(window: &[u16]) -> Result<u8, SensorError> {
    Ok(normalize_mic_amplitude(f64::from(window_amplitude(
        window,
    )?)))
}

/// An ultrasonic ranging result. `NoEcho` is not the same as a zero distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceReading {
    Cm(f64),
    NoEcho,
}

pub fn normalize_distance(d: DistanceReading) -> u8 {
    match d {
        DistanceReading::NoEcho => 0,
        DistanceReading::Cm(cm) => normalize_distance_cm(cm),
    }
}

pub fn normalize_distance_cm(cm: f64) -> u8 {
    if cm.is_nan() || cm < 0.5 {
        return 0;
    }
    let d = cm.clamp(1.0, DISTANCE_MAX_CM);
    to_normalized(1.0 + (d - 1.0) * 23.0 / 71.0)
}

pub fn normalize_pir(motion: u8) -> u8 {
    if motion == 0 {
        0
    } else {
        24
    }
}

pub fn normalize_light(lux: f64) -> u8 {
    let lux = lux.clamp(0.0, LUX_MAX);
    to_normalized(lux.sqrt().min(SQRT_LUX_FULL_SCALE) * 24.0 / SQRT_LUX_FULL_SCALE)
}

/// Audio source behind the microphone, producing AD counts over time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Waveform {
    #[default]
    Silence,
    Constant {
        level: f64,
    },
    Sine {
        freq_hz: f64,
        amplitude: f64,
        dc: f64,
    },
    /// Looped recording of AD samples at `rate_hz`.
    Samples {
        rate_hz: f64,
        data: Vec<u16>,
    },
}

/// Mid-scale bias of the microphone ADC when nothing is heard.
const MIC_BIAS: f64 = 512.0;

impl Waveform {
    pub fn sample_at(&self, t_s: f64) -> u16 {
        let v = match self {
            Waveform::Silence => MIC_BIAS,
            Waveform::Constant { level } => *level,
            Waveform::Sine {
                freq_hz,
                amplitude,
                dc,
            } => dc + amplitude * (TAU * freq_hz * t_s).sin(),
            Waveform::Samples { rate_hz, data } => {
                if data.is_empty() || *rate_hz <= 0.0 {
                    MIC_BIAS
                } else {
                    let i = (t_s * rate_hz).floor().max(0.0) as usize % data.len();
                    f64::from(data[i])
                }
            }
        };
        v.round().clamp(0.0, AD_MAX) as u16
    }

    /// Samples `[start_ms, start_ms + len_ms)` at `rate_hz`.
    pub fn window(&self, start_ms: u64, len_ms: u64, rate_hz: f64) -> Vec<u16> {
        let n = ((len_ms as f64) * rate_hz / 1000.0).round().max(1.0) as usize;
        let t0 = start_ms as f64 / 1000.0;
        (0..n)
            .map(|k| self.sample_at(t0 + k as f64 / rate_hz))
            .collect()
    }
}

/// Current physical stimulus seen by each of the six sensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusState {
    pub pot_angle_deg: f64,
    pub temperature_c: f64,
    pub audio: Waveform,
    pub distance: DistanceReading,
    pub motion: bool,
    pub lux: f64,
}

impl Default for StimulusState {
    fn default() -> Self {
        Self {
            pot_angle_deg: 0.0,
            temperature_c: 0.0,
            audio: Waveform::Silence,
            distance: DistanceReading::NoEcho,
            motion: false,
            lux: 0.0,
        }
    }
}

/// A raw reading in the sensor's own unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawSample {
    pub sensor: SensorKind,
    /// `None` only for a distance reading without echo.
    pub value: Option<f64>,
    pub t_ms: u64,
}

impl RawSample {
    /// Sixteen-bit debug echo of the reading for the wire frame.
    pub fn hint(&self) -> Option<u16> {
        let v = self.value?;
        let scaled = match self.sensor {
            SensorKind::Thermometer => v * 100.0,
            SensorKind::Distance => v * 10.0,
            _ => v,
        };
        Some(scaled.clamp(0.0, f64::from(u16::MAX - 1)) as u16)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Sampling period per sensor, indexed by wire id.
    pub period_ms: [u64; 6],
    pub mic_window_ms: u64,
    pub mic_rate_hz: u32,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            period_ms: [50; 6],
            mic_window_ms: 50,
            mic_rate_hz: 8000,
        }
    }
}

impl SamplingConfig {
    pub fn period(&self, sensor: SensorKind) -> u64 {
        self.period_ms[usize::from(sensor.wire_id())].max(1)
    }
}

impl StimulusState {
    /// Reads the stimulus as the sensor would. The microphone captures the
    /// window that ends at `now_ms`.
    pub fn read(&self, sensor: SensorKind, now_ms: u64, cfg: &SamplingConfig) -> RawSample {
        let value = match sensor {
            SensorKind::Potentiometer => Some(pot_angle_to_ad(self.pot_angle_deg)),
            SensorKind::Thermometer => Some(self.temperature_c.clamp(0.0, TEMP_MAX_C)),
            SensorKind::Microphone => {
                let start = now_ms.saturating_sub(cfg.mic_window_ms);
                let w = self
                    .audio
                    .window(start, cfg.mic_window_ms, f64::from(cfg.mic_rate_hz));
                Some(f64::from(window_amplitude(&w).unwrap_or(0)))
            }
            SensorKind::Distance => match self.distance {
                DistanceReading::NoEcho => None,
                DistanceReading::Cm(cm) => Some(cm.max(0.0)),
            },
            SensorKind::Pir => Some(if self.motion { 1.0 } else { 0.0 }),
            SensorKind::Light => Some(self.lux.clamp(0.0, LUX_MAX)),
        };
        RawSample {
            sensor,
            value,
            t_ms: now_ms,
        }
    }
}

/// Stock normalization of a raw sample. For the microphone the raw value is
/// the window amplitude.
pub fn normalize(sample: &RawSample) -> NormalizedValue {
    let v = match (sample.sensor, sample.value) {
        (SensorKind::Distance, None) => 0,
        (_, None) => 0,
        (SensorKind::Potentiometer, Some(x)) => normalize_potentiometer(x),
        (SensorKind::Thermometer, Some(x)) => normalize_thermometer(x),
        (SensorKind::Microphone, Some(x)) => normalize_mic_amplitude(x),
        (SensorKind::Distance, Some(x)) => normalize_distance_cm(x),
        (SensorKind::Pir, Some(x)) => normalize_pir(u8::from(x != 0.0)),
        (SensorKind::Light, Some(x)) => normalize_light(x),
    };
    NormalizedValue::new(v, sample.sensor).expect("normalizers stay within 0..=24")
}

/// Tracks when the active sensor is next due.
#[derive(Debug, Clone, Default)]
pub struct Sampler {
    last: Option<(SensorKind, u64)>,
}

impl Sampler {
    pub fn reset(&mut self) {
        self.last = None;
    }

    pub fn due(&self, active: SensorKind, now_ms: u64, cfg: &SamplingConfig) -> bool {
        match self.last {
            Some((s, t)) if s == active => now_ms >= t + cfg.period(active),
            _ => true,
        }
    }

    /// Samples and normalizes the active sensor if its period has elapsed.
    pub fn sample_tick(
        &mut self,
        state: &StimulusState,
        active: SensorKind,
        now_ms: u64,
        cfg: &SamplingConfig,
    ) -> Option<(RawSample, NormalizedValue)> {
        if !self.due(active, now_ms, cfg) {
            return None;
        }
        self.last = Some((active, now_ms));
        let raw = state.read(active, now_ms, cfg);
        let v = normalize(&raw);
        Some((raw, v))
    }
}
