use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use dice_core::link::LinkConditions;
use dice_core::sim::{load_scenario, run_scenario, write_trace, RecordCause, ScenarioError};

use crate::{exit, load_config, parse_probability, Failure};

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file (JSON Lines).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Where to write the trace; `-` for stdout.
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial drop probability of the link.
    #[arg(long, default_value_t = 0.0, value_parser = parse_probability)]
    pub loss: f64,
    #[arg(long, default_value_t = 0)]
    pub latency_ms: u64,
    #[arg(long, default_value_t = 0)]
    pub jitter_ms: u64,
    /// TOML config with face layout, palette and sampling periods.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl RunArgs {
    pub fn link(&self) -> LinkConditions {
        LinkConditions {
            drop_probability: self.loss,
            base_latency_ms: self.latency_ms,
            jitter_ms: self.jitter_ms,
            seed: self.seed,
        }
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let events = load_scenario(&args.scenario).map_err(|e| {
        let code = match e {
            ScenarioError::Io(_) => exit::IO,
            _ => exit::SCENARIO,
        };
        Failure::new(code, format!("{}: {e}", args.scenario.display()))
    })?;
    let trace = run_scenario(cfg, args.link(), &events)
        .map_err(|e| Failure::new(exit::USAGE, e.to_string()))?;

    let io_err = |e: io::Error| Failure::new(exit::IO, format!("{}: {e}", args.trace.display()));
    if args.trace.as_os_str() == "-" {
        let stdout = io::stdout().lock();
        write_trace(stdout, &trace).map_err(io_err)?;
    } else {
        let mut w = BufWriter::new(File::create(&args.trace).map_err(io_err)?);
        write_trace(&mut w, &trace).map_err(io_err)?;
        w.flush().map_err(io_err)?;
    }

    let count = |cause| trace.iter().filter(|r| r.cause == cause).count();
    let link = trace.last().map(|r| r.link).unwrap_or_default();
    eprintln!(
        "{} records ({} frames, {} stale, {} warnings); link sent {} delivered {} dropped {}",
        trace.len(),
        count(RecordCause::Frame),
        count(RecordCause::Stale),
        count(RecordCause::Warning),
        link.sent,
        link.delivered,
        link.dropped
    );
    Ok(())
}
