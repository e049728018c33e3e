use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use dice_cli::exit;
use dice_cli::map::{cmd_map, MapCommand};
use dice_cli::run::{cmd_run, RunArgs};
use dice_cli::serve::{cmd_serve, ServeArgs};

/// Simulated sensor and actuator cubes.
#[derive(Debug, Parser)]
#[command(name = "dice", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run a scenario headless on the virtual clock and write its trace.
    Run(RunArgs),
    /// Check, evaluate or print mapping programs.
    #[command(subcommand)]
    Map(MapCommand),
    /// Run a live session on the wall clock with HTTP and WebSocket access.
    Serve(ServeArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::USAGE),
            };
        }
    };
    let result = match &cli.command {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Map(cmd) => cmd_map(cmd),
        Cmd::Serve(args) => cmd_serve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("dice: {f}");
            ExitCode::from(f.code)
        }
    }
}
