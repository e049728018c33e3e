//! Entry points behind the `dice` binary: headless runs, mapping tools and
//! the live session server.

pub mod map;
pub mod run;
pub mod serve;

use std::path::Path;

use dice_core::sim::{ConfigError, SimConfig};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const MAPPING: u8 = 1;
    pub const SCENARIO: u8 = 2;
    pub const USAGE: u8 = 64;
    pub const IO: u8 = 74;
}

/// A failure that carries the exit code it should end the process with.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn parse_probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is outside 0..=1"))
    }
}

pub fn load_config(path: Option<&Path>) -> Result<SimConfig, Failure> {
    let Some(path) = path else {
        return Ok(SimConfig::default());
    };
    SimConfig::load(path).map_err(|e| {
        let code = match e {
            ConfigError::Io(..) => exit::IO,
            _ => exit::USAGE,
        };
        Failure::new(code, format!("{}: {e}", path.display()))
    })
}
