//! Command-line orchestration for bos-core: pattern generation, simulation,
//! reconstruction, scoring, rendering and the end-to-end roundtrip.

pub mod cli;
pub mod commands;
pub mod manifest;
pub mod protocol;
pub mod units;

pub use cli::Cli;
pub use commands::run;

/// Flattens an error chain onto one line: `outer: inner: root`.
pub fn one_line(err: &anyhow::Error) -> String {
    format!("{err:#}").replace(['\n', '\r'], " ")
}
