//! Deterministic simulation of the two cubes and the link between them.

pub mod config;
pub mod engine;
pub mod scenario;
pub mod trace;

pub use config::{ConfigError, SimConfig};
pub use engine::{run_scenario, Engine, EngineError, MappingFeedback, SensorReadout, Snapshot};
pub use scenario::{
    load_scenario, parse_scenario, scenario_to_jsonl, Command, CubeRole, ScenarioError,
    ScenarioEvent, TopSpec,
};
pub use trace::{read_trace, trace_to_string, write_trace, RecordCause, TraceRecord};
