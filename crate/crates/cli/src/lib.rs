//! Command-line front end: metric evaluation, trade-off reports, baseline
//! simulation and KL bound self-checks.
//!
//! Exit codes: 0 on success, 1 on internal errors and failed bound checks,
//! 2 on invalid input.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};

pub mod eval;
pub mod kl_check;
pub mod scst_sim;
pub mod tradeoff;

pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_INVALID: u8 = 2;

/// Input that fails validation. Maps to exit code 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

/// Exit code for an error chain: any input-side error anywhere in the chain
/// wins over internal failures.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    use captrade_core::Error as E;
    for cause in err.chain() {
        if cause.is::<Invalid>() {
            return EXIT_INVALID;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Numerical(_) => EXIT_INTERNAL,
                _ => EXIT_INVALID,
            };
        }
    }
    EXIT_INTERNAL
}

#[derive(Debug, Parser)]
#[command(
    name = "captrade",
    version,
    about = "Caption accuracy/diversity metrics and trade-off tools"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    Eval(eval::EvalArgs),
    Tradeoff(tradeoff::TradeoffArgs),
    ScstSim(scst_sim::ScstSimArgs),
    KlCheck(kl_check::KlCheckArgs),
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Eval(args) => eval::run(&args),
        Command::Tradeoff(args) => tradeoff::run(&args),
        Command::ScstSim(args) => scst_sim::run(&args),
        Command::KlCheck(args) => kl_check::run(&args),
    }
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub(crate) fn write_file(path: &Path, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write(&mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("cannot write {}", path.display()))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    write_file(path, |w| writeln!(w, "{json}"))
}

/// `dir/name` for a path given relative to a config file.
pub(crate) fn relative_to(config: &Path, target: &Path) -> PathBuf {
    match config.parent() {
        Some(dir) if target.is_relative() => dir.join(target),
        _ => target.to_path_buf(),
    }
}
