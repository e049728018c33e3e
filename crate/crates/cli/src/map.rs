use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use dice_core::actuator::PeltierMode;
use dice_core::dsl::{check_range, default_text, eval, parse, MappingProgram, MappingTarget};

use crate::{exit, Failure};

#[derive(Debug, Subcommand)]
pub enum MapCommand {
    /// Parse a mapping and range-check it over the target's input domain.
    Check {
        file: PathBuf,
        /// Domain to check against; the intermediate range 0..24 if omitted.
        #[arg(long)]
        target: Option<MappingTarget>,
    },
    /// Evaluate a mapping at one input.
    Eval {
        file: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        input: f64,
    },
    /// Print the stock mapping of a sensor or actuator.
    Defaults(DefaultsArgs),
}

#[derive(Debug, Args)]
pub struct DefaultsArgs {
    /// `sensor:light`, `actuator:fan` or a bare kind name.
    #[arg(long)]
    pub target: MappingTarget,
    #[arg(long, default_value_t = PeltierMode::Bipolar)]
    pub peltier_mode: PeltierMode,
}

fn load(file: &Path) -> Result<MappingProgram, Failure> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| Failure::new(exit::IO, format!("{}: {e}", file.display())))?;
    parse(&text).map_err(|e| Failure::new(exit::MAPPING, format!("{}:{e}", file.display())))
}

pub fn cmd_map(cmd: &MapCommand) -> Result<(), Failure> {
    match cmd {
        MapCommand::Check { file, target } => {
            let program = load(file)?;
            let (lo, hi, step) = target.map_or((0.0, 24.0, 1.0), |t| t.input_domain());
            let r = check_range(&program, lo, hi, step);
            println!("{}", program.to_text());
            println!("domain {lo}..{hi} step {step}: {} samples", r.samples);
            if let (Some(min), Some(max)) = (r.min_out, r.max_out) {
                println!("outputs {min}..{max}");
            }
            if r.is_clean() {
                return Ok(());
            }
            let list = |xs: &[f64]| {
                let shown: Vec<String> = xs.iter().take(8).map(f64::to_string).collect();
                let more = if xs.len() > 8 { ", ..." } else { "" };
                format!("{}{more}", shown.join(", "))
            };
            let mut problems = Vec::new();
            if !r.uncovered_inputs.is_empty() {
                problems.push(format!(
                    "{} uncovered inputs: {}",
                    r.uncovered_inputs.len(),
                    list(&r.uncovered_inputs)
                ));
            }
            if !r.domain_errors.is_empty() {
                problems.push(format!(
                    "{} domain errors: {}",
                    r.domain_errors.len(),
                    list(&r.domain_errors)
                ));
            }
            Err(Failure::new(
                exit::MAPPING,
                format!("{}: {}", file.display(), problems.join("; ")),
            ))
        }
        MapCommand::Eval { file, input } => {
            let program = load(file)?;
            let y = eval(&program, *input)
                .map_err(|e| Failure::new(exit::MAPPING, format!("{}: {e}", file.display())))?;
            println!("{y}");
            Ok(())
        }
        MapCommand::Defaults(args) => {
            println!("{}", default_text(args.target, args.peltier_mode));
            Ok(())
        }
    }
}
