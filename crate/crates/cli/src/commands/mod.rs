//! Subcommand implementations.

mod metrics;
mod pattern;
mod reconstruct;
mod render;
mod roundtrip;
mod simulate;

use std::path::Path;

use anyhow::{Context, Result};

use crate::cli::{Cli, Command};

pub use reconstruct::{run_method, MethodOutput};
pub use reconstruct::{load_field, save_field, validity_path};
pub use roundtrip::{default_params, pipeline, CcReport, CfsReport, FlowReport, Ordering, PatternReport, Summary};

pub fn run(cli: Cli, argv: Vec<String>) -> Result<()> {
    match cli.command {
        Command::Pattern(args) => pattern::run(args, argv),
        Command::Simulate(args) => simulate::run(args, argv),
        Command::Reconstruct(args) => reconstruct::run(args, argv),
        Command::Metrics { which } => metrics::run(which, argv),
        Command::Render { which } => render::run(which, argv),
        Command::Roundtrip(args) => roundtrip::run(args, argv),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
        }
        _ => Ok(()),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    ensure_parent(path)?;
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
