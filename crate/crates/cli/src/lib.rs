//! Command-line front end: configuration, dispatch and report emission.

pub mod commands;
pub mod config;
pub mod output;

use std::path::Path;

use anyhow::{Context, Result};

use commands::{GreenArgs, Outcome};
use config::{echo, parse_config, RunConfig};
use output::OutDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Hypotheses,
    Profile,
    Green,
    Experiment,
    Bounds,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VERDICT: i32 = 2;

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

/// Runs one command and writes the effective configuration next to its outputs.
pub fn dispatch(cmd: Command, cfg: &RunConfig, out_override: Option<&Path>, green: &GreenArgs) -> Result<Outcome> {
    let root = out_override.map_or_else(|| Path::new(&cfg.output.out_dir).to_path_buf(), Path::to_path_buf);
    let out = OutDir::create(&root, cfg.output.csv, cfg.output.svg).with_context(|| format!("creating {}", root.display()))?;
    out.write_text("effective_config.ini", &echo(cfg))?;
    match cmd {
        Command::Hypotheses => commands::hypotheses(cfg, &out),
        Command::Profile => commands::profile(cfg, &out),
        Command::Green => commands::green(cfg, green, &out),
        Command::Experiment => commands::experiment(cfg, &out),
        Command::Bounds => commands::bounds(cfg, &out),
    }
}

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if o.pass => EXIT_PASS,
        Ok(_) => EXIT_VERDICT,
        Err(_) => EXIT_ERROR,
    }
}
