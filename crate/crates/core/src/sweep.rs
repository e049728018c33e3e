//! Exhaustive sweeps and batch runs built on [`crate::batch`].

use crate::actuator::{self, ActuatorSettings, NoteContext, PeltierMode};
use crate::batch;
use crate::dsl::{default_program, eval, MappingTarget};
use crate::link::LinkConditions;
use crate::model::{ActuationCommand, ActuatorKind, CubeKind, NormalizedValue, SensorKind};
use crate::sensor;
use crate::sim::{
    run_scenario, Command, CubeRole, EngineError, ScenarioEvent, SimConfig, TraceRecord,
};

/// Every input the stock mapping of `target` is defined over: integer raw
/// readings (thermometer in 0.1 °C steps) or the 25 intermediate values.
pub fn input_grid(target: MappingTarget) -> Vec<f64> {
    match target {
        MappingTarget::Sensor(SensorKind::Thermometer) => {
            (0..=500).map(|i| i as f64 / 10.0).collect()
        }
        MappingTarget::Sensor(s) => {
            let d = s.raw_domain();
            (d.min as u32..=d.max as u32).map(f64::from).collect()
        }
        MappingTarget::Actuator(_) => (0..=24).map(f64::from).collect(),
    }
}

/// Stock mapping as a scalar. Actuators are fed a thermometer value from a
/// silent note state.
pub fn builtin_scalar(target: MappingTarget, mode: PeltierMode, x: f64) -> i64 {
    match target {
        MappingTarget::Sensor(s) => i64::from(match s {
            SensorKind::Potentiometer => sensor::normalize_potentiometer(x),
            SensorKind::Thermometer => sensor::normalize_thermometer(x),
            SensorKind::Microphone => sensor::normalize_mic_amplitude(x),
            SensorKind::Distance => sensor::normalize_distance_cm(x),
            SensorKind::Pir => sensor::normalize_pir(u8::from(x != 0.0)),
            SensorKind::Light => sensor::normalize_light(x),
        }),
        MappingTarget::Actuator(a) => {
            let v = NormalizedValue::new(x as u8, SensorKind::Thermometer).expect("grid is 0..=24");
            let settings = ActuatorSettings {
                peltier_mode: mode,
                ..Default::default()
            };
            let cmd = actuator::dispatch(v, a, &settings, &mut NoteContext::default());
            actuator::command_scalar(&cmd)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub input: f64,
    pub builtin: i64,
    pub program: Result<i64, String>,
}

/// Compares the stock DSL program against the built-in mapping over the
/// whole input grid and returns every disagreement.
pub fn dsl_equivalence(target: MappingTarget, mode: PeltierMode) -> (usize, Vec<Mismatch>) {
    let program = default_program(target, mode);
    let grid = input_grid(target);
    let results = batch::map_slice(&grid, |&x| {
        let builtin = builtin_scalar(target, mode, x);
        let got = eval(&program, x).map_err(|e| e.to_string());
        (got != Ok(builtin)).then_some(Mismatch {
            input: x,
            builtin,
            program: got,
        })
    });
    (grid.len(), results.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchCase {
    pub sensor: SensorKind,
    pub actuator: ActuatorKind,
    pub value: u8,
    pub command: ActuationCommand,
}

/// All 6 × 6 × 25 stock dispatches, each from a silent note state.
pub fn dispatch_matrix(settings: &ActuatorSettings) -> Vec<DispatchCase> {
    let n = 6 * 6 * 25;
    batch::map_indices(n, |i| {
        let sensor = SensorKind::ALL[i / 150];
        let actuator = ActuatorKind::ALL[(i / 25) % 6];
        let value = (i % 25) as u8;
        let v = NormalizedValue::new(value, sensor).expect("0..=24");
        let command = actuator::dispatch(v, actuator, settings, &mut NoteContext::default());
        DispatchCase {
            sensor,
            actuator,
            value,
            command,
        }
    })
}

/// Scenario visiting every sensor × actuator pair for `dwell_ms` each, with
/// a stimulus on every sensor that puts it mid-range or higher.
pub fn combination_sweep(dwell_ms: u64) -> Vec<ScenarioEvent> {
    let stim = |sensor, value| Command::Stimulus {
        sensor,
        value: Some(value),
        waveform: None,
        no_echo: false,
    };
    let mut events = vec![
        stim(SensorKind::Potentiometer, 135.0),
        stim(SensorKind::Thermometer, 37.0),
        stim(SensorKind::Microphone, 600.0),
        stim(SensorKind::Distance, 50.0),
        stim(SensorKind::Pir, 1.0),
        stim(SensorKind::Light, 20000.0),
    ]
    .into_iter()
    .map(|command| ScenarioEvent { t_ms: 0, command })
    .collect::<Vec<_>>();

    let mut t = 0;
    for s in SensorKind::ALL {
        for a in ActuatorKind::ALL {
            for (cube, top) in [
                (CubeRole::Sensor, s.to_string()),
                (CubeRole::Actuator, a.to_string()),
            ] {
                events.push(ScenarioEvent {
                    t_ms: t,
                    command: Command::Rotate { cube, top },
                });
            }
            t += dwell_ms;
        }
    }
    events.push(ScenarioEvent {
        t_ms: t,
        command: Command::End,
    });
    events
}

/// Runs one scenario under several seeds; traces come back in seed order.
pub fn run_seeds(
    cfg: &SimConfig,
    link: LinkConditions,
    events: &[ScenarioEvent],
    seeds: &[u64],
) -> Vec<Result<Vec<TraceRecord>, EngineError>> {
    batch::map_slice(seeds, |&seed| {
        run_scenario(cfg.clone(), LinkConditions { seed, ..link }, events)
    })
}
