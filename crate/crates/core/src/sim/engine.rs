//! Discrete-event engine binding the two cubes and the link.
//!
//! One queue orders everything by `(time, priority, insertion)` where the
//! priority runs scenario commands, then sensor sampling, then frame
//! deliveries, then stale checks. Given the same scenario, seed and config
//! the produced trace is identical byte for byte.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::Serialize;
use thiserror::Error;

use super::config::SimConfig;
use super::scenario::{tone_for_amplitude, Command, CubeRole, ScenarioEvent, TopSpec};
use super::trace::{RecordCause, TraceRecord};
use crate::actuator::{self, ActuatorSettings, NoteContext, PeltierMode};
use crate::dsl::{self, check_range, default_text, eval, MappingProgram, MappingTarget};
use crate::link::{
    stale_guard, Frame, Freshness, LinkConditions, LinkError, LinkStats, LossyLink, SeqTracker,
    FRAME_LEN, STALE_TIMEOUT_MS,
};
use crate::model::{
    face_from_orientation, ActuationCommand, ActuatorKind, CubeKind, CubeOrientation, Face,
    FaceAssignment, NormalizedValue, SensorKind,
};
use crate::sensor::{self, DistanceReading, RawSample, Sampler, StimulusState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("{0}")]
    InvalidCommand(String),
    #[error("`{top}` is not on the {cube} cube")]
    NotOnCube { cube: CubeRole, top: String },
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error("mapping for {target} rejected: {message}")]
    Mapping {
        target: MappingTarget,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Command(usize),
    Sample { generation: u64 },
    Deliver([u8; FRAME_LEN]),
    StaleCheck { generation: u64 },
}

impl Event {
    fn priority(&self) -> u8 {
        match self {
            Event::Command(_) => 0,
            Event::Sample { .. } => 1,
            Event::Deliver(_) => 2,
            Event::StaleCheck { .. } => 3,
        }
    }
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Scheduled {
    t: u64,
    priority: u8,
    id: u64,
    event: Event,
}

/// A custom mapping with the text it was parsed from.
#[derive(Debug, Clone)]
struct CustomMapping {
    text: String,
    program: MappingProgram,
}

#[derive(Debug, Clone)]
struct SensorCube {
    orientation: CubeOrientation,
    face: Face,
    assignment: FaceAssignment<SensorKind>,
    stimulus: StimulusState,
    sampler: Sampler,
    last_raw: Option<RawSample>,
    last_value: Option<NormalizedValue>,
}

#[derive(Debug, Clone)]
struct ActuatorCube {
    orientation: CubeOrientation,
    face: Face,
    assignment: FaceAssignment<ActuatorKind>,
    settings: ActuatorSettings,
    notes: NoteContext,
    seq: SeqTracker,
    last_value: Option<NormalizedValue>,
    last_rx: Option<u64>,
    last_command: Option<ActuationCommand>,
    stale: bool,
}

impl SensorCube {
    fn active(&self) -> SensorKind {
        self.assignment.active_kind(self.face)
    }
}

impl ActuatorCube {
    fn active(&self) -> ActuatorKind {
        self.assignment.active_kind(self.face)
    }
}

/// Where parse or range-check feedback for the latest mapping change lives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappingFeedback {
    pub target: MappingTarget,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub col: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensorReadout {
    pub sensor: SensorKind,
    pub raw: Option<f64>,
    pub normalized: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActiveFace<K> {
    pub face: Face,
    pub kind: K,
}

/// Read-only copy of the engine state for live clients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub proto: u32,
    pub t_ms: u64,
    pub sensor: ActiveFace<SensorKind>,
    pub actuator: ActiveFace<ActuatorKind>,
    pub sensors: Vec<SensorReadout>,
    pub last_value: Option<NormalizedValue>,
    pub command: Option<ActuationCommand>,
    pub stale: bool,
    pub link: LinkStats,
    pub link_conditions: LinkConditions,
    pub peltier_mode: PeltierMode,
    pub mappings: BTreeMap<MappingTarget, String>,
    pub custom_mappings: Vec<MappingTarget>,
    pub last_mapping_feedback: Option<MappingFeedback>,
}

pub struct Engine {
    cfg: SimConfig,
    now: u64,
    queue: BinaryHeap<Reverse<Scheduled>>,
    next_id: u64,
    commands: Vec<Command>,
    sensor: SensorCube,
    actuator: ActuatorCube,
    link: LossyLink,
    tx_seq: u16,
    sample_generation: u64,
    stale_generation: u64,
    mappings: BTreeMap<MappingTarget, CustomMapping>,
    feedback: Option<MappingFeedback>,
    outbox: Option<Vec<[u8; FRAME_LEN]>>,
    finished: bool,
    records: Vec<TraceRecord>,
}

impl Engine {
    /// Both cubes start resting on `pos_z`.
    pub fn new(cfg: SimConfig, link: LinkConditions) -> Result<Self, EngineError> {
        let rest = CubeOrientation::resting_on(Face::PosZ);
        let sensor = SensorCube {
            orientation: rest,
            face: Face::PosZ,
            assignment: cfg.sensor_faces.clone(),
            stimulus: StimulusState::default(),
            sampler: Sampler::default(),
            last_raw: None,
            last_value: None,
        };
        let actuator = ActuatorCube {
            orientation: rest,
            face: Face::PosZ,
            assignment: cfg.actuator_faces.clone(),
            settings: cfg.actuator,
            notes: NoteContext::default(),
            seq: SeqTracker::default(),
            last_value: None,
            last_rx: None,
            last_command: None,
            stale: false,
        };
        let mut engine = Self {
            link: LossyLink::new(link)?,
            cfg,
            now: 0,
            queue: BinaryHeap::new(),
            next_id: 0,
            commands: Vec::new(),
            sensor,
            actuator,
            tx_seq: 0,
            sample_generation: 0,
            stale_generation: 0,
            mappings: BTreeMap::new(),
            feedback: None,
            outbox: None,
            finished: false,
            records: Vec::new(),
        };
        engine.schedule(0, Event::Sample { generation: 0 });
        Ok(engine)
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn active_sensor(&self) -> SensorKind {
        self.sensor.active()
    }

    pub fn active_actuator(&self) -> ActuatorKind {
        self.actuator.active()
    }

    pub fn link_stats(&self) -> LinkStats {
        self.link.stats()
    }

    /// Frames leave through [`Engine::drain_outbox`] instead of the simulated
    /// link, for carrying them over a real transport.
    pub fn use_external_link(&mut self) {
        self.outbox = Some(Vec::new());
    }

    pub fn drain_outbox(&mut self) -> Vec<[u8; FRAME_LEN]> {
        self.outbox.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Hands a frame from an external transport to the actuator cube now.
    pub fn inject_frame(&mut self, bytes: [u8; FRAME_LEN]) {
        self.schedule(self.now, Event::Deliver(bytes));
    }

    fn schedule(&mut self, t: u64, event: Event) {
        let s = Scheduled {
            t,
            priority: event.priority(),
            id: self.next_id,
            event,
        };
        self.next_id += 1;
        self.queue.push(Reverse(s));
    }

    pub fn schedule_scenario(&mut self, events: &[ScenarioEvent]) {
        for ev in events {
            let idx = self.commands.len();
            self.commands.push(ev.command.clone());
            self.schedule(ev.t_ms.max(self.now), Event::Command(idx));
        }
    }

    /// Advances the virtual clock to `until_ms` (or to the scenario's end,
    /// whichever comes first) and returns the records produced on the way.
    pub fn step(&mut self, until_ms: u64) -> Vec<TraceRecord> {
        while !self.finished {
            match self.queue.peek() {
                Some(Reverse(s)) if s.t <= until_ms => {}
                _ => break,
            }
            let Reverse(s) = self.queue.pop().expect("peeked");
            self.now = s.t;
            self.handle(s.event);
        }
        if !self.finished {
            self.now = self.now.max(until_ms);
        }
        std::mem::take(&mut self.records)
    }

    /// Runs a whole scenario and returns its trace.
    pub fn run(mut self, events: &[ScenarioEvent]) -> Vec<TraceRecord> {
        self.schedule_scenario(events);
        let end = events.last().map_or(0, |e| e.t_ms);
        self.step(end)
    }

    fn handle(&mut self, event: Event) {
        match event {
            Event::Command(idx) => {
                let cmd = self.commands[idx].clone();
                if let Err(e) = self.apply(cmd) {
                    self.warn(e.to_string());
                }
            }
            Event::Sample { generation } if generation == self.sample_generation => {
                self.sample();
            }
            Event::Deliver(bytes) => self.deliver(bytes),
            Event::StaleCheck { generation } if generation == self.stale_generation => {
                self.stale_check();
            }
            _ => {}
        }
    }

    /// Applies a command at the current time.
    pub fn apply(&mut self, cmd: Command) -> Result<(), EngineError> {
        cmd.validate().map_err(EngineError::InvalidCommand)?;
        match cmd {
            Command::Stimulus {
                sensor,
                value,
                waveform,
                no_echo,
            } => self.set_stimulus(sensor, value, waveform, no_echo),
            Command::Rotate { cube, top } => {
                let spec: TopSpec = top.parse().map_err(EngineError::InvalidCommand)?;
                self.rotate(cube, spec).map(|_| ())?;
            }
            Command::SetLink {
                loss,
                latency_ms,
                jitter_ms,
            } => self.link.set_conditions(loss, latency_ms, jitter_ms)?,
            Command::SetMapping { target, program } => self.set_mapping(target, &program)?,
            Command::ResetMapping { target } => {
                self.mappings.remove(&target);
                self.feedback = Some(MappingFeedback {
                    target,
                    ok: true,
                    line: None,
                    col: None,
                    message: "stock mapping restored".into(),
                });
            }
            Command::SetPeltierMode { mode } => self.actuator.settings.peltier_mode = mode,
            Command::End => self.finished = true,
        }
        Ok(())
    }

    fn set_stimulus(
        &mut self,
        sensor: SensorKind,
        value: Option<f64>,
        waveform: Option<sensor::Waveform>,
        no_echo: bool,
    ) {
        let st = &mut self.sensor.stimulus;
        match sensor {
            SensorKind::Potentiometer => st.pot_angle_deg = value.unwrap_or(0.0),
            SensorKind::Thermometer => st.temperature_c = value.unwrap_or(0.0),
            SensorKind::Microphone => {
                st.audio = match (waveform, value) {
                    (Some(w), _) => w,
                    (None, Some(v)) => tone_for_amplitude(v),
                    (None, None) => sensor::Waveform::Silence,
                }
            }
            SensorKind::Distance => {
                st.distance = match value {
                    Some(cm) if !no_echo => DistanceReading::Cm(cm),
                    _ => DistanceReading::NoEcho,
                }
            }
            SensorKind::Pir => st.motion = value.unwrap_or(0.0) != 0.0,
            SensorKind::Light => st.lux = value.unwrap_or(0.0),
        }
    }

    /// Turns a cube so the requested face is up and returns that face.
    pub fn rotate(&mut self, cube: CubeRole, top: TopSpec) -> Result<Face, EngineError> {
        let not_on = |top: String| EngineError::NotOnCube { cube, top };
        let face = match (cube, top) {
            (_, TopSpec::Face(f)) => f,
            (CubeRole::Sensor, TopSpec::Sensor(k)) => self.sensor.assignment.face_of(k),
            (CubeRole::Actuator, TopSpec::Actuator(k)) => self.actuator.assignment.face_of(k),
            (_, TopSpec::Sensor(k)) => return Err(not_on(k.to_string())),
            (_, TopSpec::Actuator(k)) => return Err(not_on(k.to_string())),
        };
        let orientation = CubeOrientation::resting_on(face);
        match cube {
            CubeRole::Sensor => self.reorient_sensor(orientation),
            CubeRole::Actuator => self.reorient_actuator(orientation),
        }
        Ok(face)
    }

    /// Feeds an arbitrary up-vector to the sensor cube, as its IMU would.
    pub fn reorient_sensor(&mut self, o: CubeOrientation) {
        let face = face_from_orientation(&o, Some(self.sensor.face));
        self.sensor.orientation = o;
        if face != self.sensor.face {
            self.sensor.face = face;
            self.sensor.sampler.reset();
            self.sample_generation += 1;
            let generation = self.sample_generation;
            self.schedule(self.now, Event::Sample { generation });
        }
    }

    pub fn reorient_actuator(&mut self, o: CubeOrientation) {
        let face = face_from_orientation(&o, Some(self.actuator.face));
        self.actuator.orientation = o;
        if face != self.actuator.face {
            self.actuator.face = face;
            // The new actuator picks up on the next delivery.
            self.actuator.notes = NoteContext::default();
            self.actuator.last_command = None;
        }
    }

    /// Installs a custom mapping if it parses and covers the target's input
    /// domain without gaps or domain errors. Otherwise the previous mapping
    /// stays and the reason is kept for clients.
    pub fn set_mapping(&mut self, target: MappingTarget, text: &str) -> Result<(), EngineError> {
        let program = match dsl::parse(text) {
            Ok(p) => p,
            Err(e) => {
                self.feedback = Some(MappingFeedback {
                    target,
                    ok: false,
                    line: Some(e.line),
                    col: Some(e.col),
                    message: e.kind.to_string(),
                });
                return Err(EngineError::Mapping {
                    target,
                    message: e.to_string(),
                });
            }
        };
        let (lo, hi, step) = target.input_domain();
        let report = check_range(&program, lo, hi, step);
        if !report.is_clean() {
            let first = report
                .uncovered_inputs
                .first()
                .map(|x| format!("no case covers input {x}"))
                .or_else(|| {
                    report
                        .domain_errors
                        .first()
                        .map(|x| format!("domain error at input {x}"))
                })
                .unwrap_or_default();
            let message = format!(
                "{first} ({} uncovered, {} domain errors over {lo}..{hi})",
                report.uncovered_inputs.len(),
                report.domain_errors.len()
            );
            self.feedback = Some(MappingFeedback {
                target,
                ok: false,
                line: None,
                col: None,
                message: message.clone(),
            });
            return Err(EngineError::Mapping { target, message });
        }
        self.feedback = Some(MappingFeedback {
            target,
            ok: true,
            line: None,
            col: None,
            message: format!(
                "applied; outputs {}..{}",
                report.min_out.unwrap_or(0),
                report.max_out.unwrap_or(0)
            ),
        });
        self.mappings.insert(
            target,
            CustomMapping {
                text: text.to_string(),
                program,
            },
        );
        Ok(())
    }

    fn record(
        &mut self,
        cause: RecordCause,
        command: Option<ActuationCommand>,
        warning: Option<String>,
    ) {
        let value = self.actuator.last_value;
        self.records.push(TraceRecord {
            t_ms: self.now,
            cause,
            active_sensor: self.sensor.active(),
            active_actuator: self.actuator.active(),
            value: value.map(|v| v.value()),
            source: value.map(|v| v.sensor()),
            command,
            link: self.link.stats(),
            warning,
        });
    }

    fn warn(&mut self, msg: String) {
        log::warn!("t={} {msg}", self.now);
        self.record(RecordCause::Warning, None, Some(msg));
    }

    /// Normalized value for a raw sample under the active (custom or stock)
    /// sensor mapping. `Err` carries a warning and means nothing is sent.
    fn normalize(
        &self,
        raw: &RawSample,
    ) -> Result<(NormalizedValue, Option<String>, bool), String> {
        let target = MappingTarget::Sensor(raw.sensor);
        let Some(custom) = self.mappings.get(&target) else {
            return Ok((sensor::normalize(raw), None, false));
        };
        // NoEcho never reaches a program.
        let Some(x) = raw.value else {
            return Ok((sensor::normalize(raw), None, true));
        };
        match eval(&custom.program, x) {
            Ok(y) => {
                let (v, clamped) = NormalizedValue::saturating(y, raw.sensor);
                let warning = clamped
                    .then(|| format!("{target} mapping produced {y}, clamped to {}", v.value()));
                Ok((v, warning, true))
            }
            Err(e) => Err(format!("{target} mapping: {e}; nothing sent")),
        }
    }

    fn sample(&mut self) {
        let active = self.sensor.active();
        let period = self.cfg.sampling.period(active);
        let generation = self.sample_generation;
        self.schedule(self.now + period, Event::Sample { generation });

        let Some((raw, _)) = self.sensor.sampler.sample_tick(
            &self.sensor.stimulus,
            active,
            self.now,
            &self.cfg.sampling,
        ) else {
            return;
        };
        let (value, warning, custom) = match self.normalize(&raw) {
            Ok(r) => r,
            Err(w) => {
                self.sensor.last_raw = Some(raw);
                self.warn(w);
                return;
            }
        };
        if let Some(w) = warning {
            self.warn(w);
        }
        let frame = Frame::new(value, self.tx_seq, raw.hint(), custom);
        self.tx_seq = self.tx_seq.wrapping_add(1);
        self.sensor.last_raw = Some(raw);
        self.sensor.last_value = Some(value);
        let bytes = frame
            .encode()
            .expect("frames built from valid values encode");

        if let Some(outbox) = self.outbox.as_mut() {
            outbox.push(bytes);
            return;
        }
        if let Some(at) = self.link.send(self.now) {
            self.schedule(at, Event::Deliver(bytes));
        }
    }

    fn deliver(&mut self, bytes: [u8; FRAME_LEN]) {
        let frame = match Frame::decode(&bytes) {
            Ok(f) => f,
            Err(e) => return self.warn(format!("rejected frame: {e}")),
        };
        if !self.actuator.seq.accept(frame.seq) {
            return;
        }
        let value = frame.normalized().expect("decoded frames are valid");
        self.actuator.last_value = Some(value);
        self.actuator.last_rx = Some(self.now);
        self.actuator.stale = false;
        self.stale_generation += 1;
        let generation = self.stale_generation;
        self.schedule(
            self.now + STALE_TIMEOUT_MS + 1,
            Event::StaleCheck { generation },
        );

        let (command, warning) = self.actuate(value);
        self.actuator.last_command = Some(command.clone());
        self.record(RecordCause::Frame, Some(command), warning);
    }

    fn actuate(&mut self, v: NormalizedValue) -> (ActuationCommand, Option<String>) {
        let active = self.actuator.active();
        let a = &mut self.actuator;
        let target = MappingTarget::Actuator(active);
        match self.mappings.get(&target) {
            None => (
                actuator::dispatch(v, active, &a.settings, &mut a.notes),
                None,
            ),
            Some(custom) => match eval(&custom.program, f64::from(v.value())) {
                Ok(out) => (
                    actuator::command_from_scalar(
                        out,
                        active,
                        v.sensor(),
                        &a.settings,
                        &mut a.notes,
                    ),
                    None,
                ),
                Err(e) => (
                    actuator::neutral_command(active, v.sensor(), &a.settings, &mut a.notes),
                    Some(format!("{target} mapping: {e}; holding neutral")),
                ),
            },
        }
    }

    fn stale_check(&mut self) {
        let Some(last_rx) = self.actuator.last_rx else {
            return;
        };
        if self.actuator.stale || stale_guard(last_rx, self.now) != Freshness::Stale {
            return;
        }
        self.actuator.stale = true;
        let active = self.actuator.active();
        let sensor = self
            .actuator
            .last_value
            .map_or(SensorKind::Potentiometer, |v| v.sensor());
        let a = &mut self.actuator;
        let cmd = actuator::neutral_command(active, sensor, &a.settings, &mut a.notes);
        a.last_command = Some(cmd.clone());
        self.record(RecordCause::Stale, Some(cmd), None);
    }

    fn mapping_text(&self, target: MappingTarget) -> String {
        match self.mappings.get(&target) {
            Some(m) => m.text.clone(),
            None => default_text(target, self.actuator.settings.peltier_mode).to_string(),
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        let sensors = SensorKind::ALL
            .into_iter()
            .map(|s| {
                let raw = self.sensor.stimulus.read(s, self.now, &self.cfg.sampling);
                let normalized = self.normalize(&raw).ok().map(|(v, _, _)| v.value());
                SensorReadout {
                    sensor: s,
                    raw: raw.value,
                    normalized,
                }
            })
            .collect();
        Snapshot {
            proto: 1,
            t_ms: self.now,
            sensor: ActiveFace {
                face: self.sensor.face,
                kind: self.sensor.active(),
            },
            actuator: ActiveFace {
                face: self.actuator.face,
                kind: self.actuator.active(),
            },
            sensors,
            last_value: self.actuator.last_value,
            command: self.actuator.last_command.clone(),
            stale: self.actuator.stale,
            link: self.link.stats(),
            link_conditions: *self.link.conditions(),
            peltier_mode: self.actuator.settings.peltier_mode,
            mappings: MappingTarget::all()
                .map(|t| (t, self.mapping_text(t)))
                .collect(),
            custom_mappings: self.mappings.keys().copied().collect(),
            last_mapping_feedback: self.feedback.clone(),
        }
    }
}

/// Runs a scenario from a fresh engine.
pub fn run_scenario(
    cfg: SimConfig,
    link: LinkConditions,
    events: &[ScenarioEvent],
) -> Result<Vec<TraceRecord>, EngineError> {
    Ok(Engine::new(cfg, link)?.run(events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::parse_scenario;

    fn lossless(latency: u64) -> LinkConditions {
        LinkConditions {
            base_latency_ms: latency,
            ..Default::default()
        }
    }

    fn scenario(lines: &[&str]) -> Vec<ScenarioEvent> {
        parse_scenario(&lines.join("\n")).unwrap()
    }

    #[test]
    fn pir_motion_reaches_vibration() {
        let evs = scenario(&[
            r#"{"t_ms":0,"event":"rotate","cube":"sensor","top":"pir"}"#,
            r#"{"t_ms":0,"event":"rotate","cube":"actuator","top":"vibration"}"#,
            r#"{"t_ms":0,"event":"stimulus","sensor":"pir","value":1}"#,
            r#"{"t_ms":500,"event":"end"}"#,
        ]);
        let trace = run_scenario(SimConfig::default(), lossless(30), &evs).unwrap();
        let first = trace
            .iter()
            .find(|r| r.cause == RecordCause::Frame)
            .unwrap();
        // First sample at t=0 plus 30 ms latency.
        assert_eq!(first.t_ms, 30);
        assert_eq!(
            first.command,
            Some(ActuationCommand::Vibration { pwm: 255 })
        );
        assert_eq!(first.value, Some(24));
    }

    #[test]
    fn rotation_remaps_on_next_delivery() {
        let evs = scenario(&[
            r#"{"t_ms":0,"event":"rotate","cube":"sensor","top":"light"}"#,
            r#"{"t_ms":0,"event":"rotate","cube":"actuator","top":"power_led"}"#,
            r#"{"t_ms":0,"event":"stimulus","sensor":"light","value":16384}"#,
            r#"{"t_ms":120,"event":"rotate","cube":"actuator","top":"ring_graph"}"#,
            r#"{"t_ms":300,"event":"end"}"#,
        ]);
        let trace = run_scenario(SimConfig::default(), lossless(0), &evs).unwrap();
        let after: Vec<_> = trace.iter().filter(|r| r.t_ms > 120).collect();
        let palette = crate::actuator::SensorColorPalette::default();
        assert_eq!(
            after[0].command,
            Some(ActuationCommand::RingGraph {
                lit_count: 12,
                color: palette.color(SensorKind::Light),
                per_pixel_brightness: 64
            })
        );
        let before = trace.iter().find(|r| r.t_ms < 120).unwrap();
        assert_eq!(
            before.command,
            Some(ActuationCommand::PowerLed { brightness: 64 })
        );
    }

    #[test]
    fn rotate_to_foreign_kind_fails() {
        let mut e = Engine::new(SimConfig::default(), lossless(0)).unwrap();
        assert_eq!(
            e.rotate(CubeRole::Sensor, TopSpec::Actuator(ActuatorKind::Fan)),
            Err(EngineError::NotOnCube {
                cube: CubeRole::Sensor,
                top: "fan".into()
            })
        );
        let face = e
            .rotate(CubeRole::Sensor, TopSpec::Sensor(SensorKind::Pir))
            .unwrap();
        assert_eq!(
            face,
            SimConfig::default().sensor_faces.face_of(SensorKind::Pir)
        );
        let recs = e.step(200);
        assert!(recs.iter().all(|r| r.value == Some(0)));
        assert!(!recs.is_empty());
    }

    #[test]
    fn total_loss_goes_stale() {
        let evs = scenario(&[
            r#"{"t_ms":0,"event":"rotate","cube":"sensor","top":"thermometer"}"#,
            r#"{"t_ms":0,"event":"rotate","cube":"actuator","top":"peltier"}"#,
            r#"{"t_ms":0,"event":"stimulus","sensor":"thermometer","value":50}"#,
            r#"{"t_ms":500,"event":"set_link","loss":1.0}"#,
            r#"{"t_ms":2500,"event":"end"}"#,
        ]);
        let trace = run_scenario(SimConfig::default(), lossless(10), &evs).unwrap();
        let last_frame = trace
            .iter()
            .rfind(|r| r.cause == RecordCause::Frame)
            .unwrap();
        assert_eq!(
            last_frame.command,
            Some(ActuationCommand::Peltier { pwm: 255 })
        );
        let stale = trace
            .iter()
            .find(|r| r.cause == RecordCause::Stale)
            .unwrap();
        assert_eq!(stale.t_ms, last_frame.t_ms + STALE_TIMEOUT_MS + 1);
        assert_eq!(stale.command, Some(ActuationCommand::Peltier { pwm: 0 }));
        assert_eq!(
            trace
                .iter()
                .filter(|r| r.cause == RecordCause::Stale)
                .count(),
            1
        );
    }

    #[test]
    fn recovers_after_stale() {
        let evs = scenario(&[
            r#"{"t_ms":0,"event":"rotate","cube":"actuator","top":"fan"}"#,
            r#"{"t_ms":0,"event":"stimulus","sensor":"pir","value":1}"#,
            r#"{"t_ms":100,"event":"set_link","loss":1.0}"#,
            r#"{"t_ms":1500,"event":"set_link","loss":0.0}"#,
            r#"{"t_ms":1700,"event":"end"}"#,
        ]);
        let trace = run_scenario(SimConfig::default(), lossless(0), &evs).unwrap();
        let stale_at = trace
            .iter()
            .position(|r| r.cause == RecordCause::Stale)
            .unwrap();
        let resumed = &trace[stale_at + 1];
        assert_eq!(resumed.cause, RecordCause::Frame);
        assert_eq!(resumed.command, Some(ActuationCommand::Fan { pwm: 255 }));
    }

    #[test]
    fn custom_fan_mapping_reaches_below_floor() {
        let mut e = Engine::new(SimConfig::default(), lossless(0)).unwrap();
        e.rotate(CubeRole::Actuator, TopSpec::Actuator(ActuatorKind::Fan))
            .unwrap();
        e.rotate(CubeRole::Sensor, TopSpec::Sensor(SensorKind::Potentiometer))
            .unwrap();
        e.set_mapping(
            MappingTarget::Actuator(ActuatorKind::Fan),
            "0..24 => lin(0..24 -> 0..255)",
        )
        .unwrap();
        e.apply(Command::Stimulus {
            sensor: SensorKind::Potentiometer,
            value: Some(11.25), // 1/24 of the sweep
            waveform: None,
            no_echo: false,
        })
        .unwrap();
        let recs = e.step(100);
        let last = recs.last().unwrap();
        assert_eq!(last.value, Some(1));
        assert_eq!(last.command, Some(ActuationCommand::Fan { pwm: 11 }));
    }

    #[test]
    fn broken_mapping_keeps_previous() {
        let mut e = Engine::new(SimConfig::default(), lossless(0)).unwrap();
        let target = MappingTarget::Actuator(ActuatorKind::Fan);
        let err = e.set_mapping(target, "0..24 => lin(0..24 -> ").unwrap_err();
        assert!(matches!(err, EngineError::Mapping { .. }));
        let fb = e.snapshot().last_mapping_feedback.unwrap();
        assert!(!fb.ok);
        assert_eq!((fb.line, fb.col), (Some(1), Some(23)));
        assert_eq!(
            e.snapshot().mappings[&target],
            default_text(target, PeltierMode::Bipolar)
        );

        // Parses, but leaves inputs 13..24 uncovered.
        let err = e.set_mapping(target, "0..12 => const(200)").unwrap_err();
        assert!(err.to_string().contains("no case covers input 13"), "{err}");
        assert!(e.snapshot().custom_mappings.is_empty());
    }

    #[test]
    fn custom_sensor_mapping_is_clamped_with_warning() {
        let mut e = Engine::new(SimConfig::default(), lossless(0)).unwrap();
        e.rotate(CubeRole::Sensor, TopSpec::Sensor(SensorKind::Light))
            .unwrap();
        e.rotate(
            CubeRole::Actuator,
            TopSpec::Actuator(ActuatorKind::RingGraph),
        )
        .unwrap();
        e.set_mapping(
            MappingTarget::Sensor(SensorKind::Light),
            "0..65535 => const(99)",
        )
        .unwrap();
        let recs = e.step(0);
        assert_eq!(recs[0].cause, RecordCause::Warning);
        assert!(recs[0].warning.as_ref().unwrap().contains("clamped to 24"));
        assert_eq!(recs[1].value, Some(24));
    }

    #[test]
    fn sensor_eval_error_sends_nothing() {
        let mut e = Engine::new(SimConfig::default(), lossless(0)).unwrap();
        e.rotate(CubeRole::Sensor, TopSpec::Sensor(SensorKind::Thermometer))
            .unwrap();
        // Covers the 0.1 °C grid but not 0.05 °C.
        e.set_mapping(
            MappingTarget::Sensor(SensorKind::Thermometer),
            "0..0.04 => const(0); 0.2..50 => const(3)",
        )
        .unwrap_err();
        e.set_mapping(
            MappingTarget::Sensor(SensorKind::Thermometer),
            "0..0 => const(0); 0.1..50 => const(3); 0.001..0.099 => const(1)",
        )
        .unwrap();
        e.apply(Command::Stimulus {
            sensor: SensorKind::Thermometer,
            value: Some(0.0005),
            waveform: None,
            no_echo: false,
        })
        .unwrap();
        let recs = e.step(10);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].cause, RecordCause::Warning);
        assert_eq!(e.link_stats().sent, 0);
    }

    #[test]
    fn snapshot_defaults_are_neutral() {
        let e = Engine::new(SimConfig::default(), lossless(0)).unwrap();
        let s = e.snapshot();
        assert_eq!(s.proto, 1);
        assert_eq!(s.command, None);
        assert_eq!(s.mappings.len(), 12);
        assert!(s.sensors.iter().all(|r| r.normalized == Some(0)));
        assert_eq!(s.link, LinkStats::default());
    }

    #[test]
    fn external_link_uses_outbox() {
        let mut a = Engine::new(SimConfig::default(), lossless(0)).unwrap();
        a.use_external_link();
        a.apply(Command::Stimulus {
            sensor: SensorKind::Pir,
            value: Some(1.0),
            waveform: None,
            no_echo: false,
        })
        .unwrap();
        assert!(a.step(120).is_empty());
        let frames = a.drain_outbox();
        assert_eq!(frames.len(), 3);

        let mut b = Engine::new(SimConfig::default(), lossless(0)).unwrap();
        b.use_external_link();
        b.rotate(
            CubeRole::Actuator,
            TopSpec::Actuator(ActuatorKind::PowerLed),
        )
        .unwrap();
        for f in frames {
            b.inject_frame(f);
        }
        let recs: Vec<_> = b
            .step(0)
            .into_iter()
            .filter(|r| r.source == Some(SensorKind::Pir))
            .collect();
        assert_eq!(recs.len(), 3);
        assert_eq!(
            recs[0].command,
            Some(ActuationCommand::PowerLed { brightness: 255 })
        );
    }

    #[test]
    fn imu_hysteresis_in_engine() {
        let mut e = Engine::new(SimConfig::default(), lossless(0)).unwrap();
        let tilt = |deg: f64| {
            let a = deg.to_radians();
            CubeOrientation::new([a.sin(), 0.0, a.cos()]).unwrap()
        };
        // 46° towards +x: dot(+x) - dot(+z) = 0.025 < margin, stays on pos_z.
        e.reorient_sensor(tilt(46.0));
        assert_eq!(e.active_sensor(), SensorKind::Pir);
        e.reorient_sensor(tilt(60.0));
        assert_eq!(e.active_sensor(), SensorKind::Potentiometer);
    }
}
