//! The `dgme` command-line pipeline: synthetic corpora, descriptor
//! extraction, calibration, splitting, training, evaluation and SVG plots.

pub mod args;
mod commands;
pub mod viz;

use std::fmt;

pub use args::Cli;
use args::Command;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// A failed command: exit code plus a one-line message.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }

    /// Prefixes the message with where the error happened.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<dgme_core::Error> for CliError {
    fn from(e: dgme_core::Error) -> Self {
        let code = match e {
            dgme_core::Error::NonFinite(_) => EXIT_NUMERIC,
            dgme_core::Error::Config(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Extract(a) => commands::extract(&a),
        Command::Stats(a) => commands::stats(&a),
        Command::Normalize(a) => commands::normalize(&a),
        Command::Remap(a) => commands::remap(&a),
        Command::Split(a) => commands::split(&a),
        Command::Oversample(a) => commands::oversample(&a),
        Command::Train(a) => commands::train(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Viz(a) => commands::viz(&a),
    }
}
