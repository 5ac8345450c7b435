//! Command implementations behind the `sigjoin` binary.
//!
//! Everything here is a library function so the integration tests can
//! drive the exact code paths the binary runs. Data tables and timing
//! stats go to stderr; CSV payloads go to stdout or the `--out` path.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use sigjoin_core::{JoinError, Relation, Schema};

pub mod args;
pub mod bench;
pub mod cost_cmd;
pub mod gen;
pub mod join_cmd;

pub use args::{Cli, Command};

/// Environment variable consulted for the generator seed when no --seed
/// flag is given.
pub const SEED_ENV: &str = "SIGJOIN_SEED";

const DEFAULT_SEED: u64 = 42;

/// Exit code 1 for flag-level mistakes, 2 for bad data: unreadable or
/// malformed inputs, schema violations, config parse failures.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

pub(crate) fn usage(msg: impl fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

pub(crate) fn data(msg: impl fmt::Display) -> CliError {
    CliError::Data(msg.to_string())
}

/// Join failures caused by flag choices are usage errors; everything
/// else reflects the input data.
pub(crate) fn join_error(err: JoinError) -> CliError {
    match err {
        JoinError::BadPartitions | JoinError::ModeMismatch { .. } => usage(err),
        _ => data(err),
    }
}

/// Seed precedence: --seed flag, then $SIGJOIN_SEED, then 42.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_ENV} must be an unsigned integer, got {text:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_SEED),
        Err(err) => Err(usage(format!("{SEED_ENV}: {err}"))),
    }
}

/// Opens the `--out` target, or stdout when absent.
pub(crate) fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(path) => {
            let file = fs::File::create(path)
                .map_err(|e| data(format!("cannot create {}: {e}", path.display())))?;
            Ok(Box::new(io::BufWriter::new(file)))
        }
        None => Ok(Box::new(io::BufWriter::new(io::stdout()))),
    }
}

/// Loads a relation from `path` plus the `.schema` sidecar beside it.
pub(crate) fn load_relation(path: &Path) -> Result<Relation, CliError> {
    let sidecar = path.with_extension("schema");
    let schema = Schema::load_sidecar(&sidecar)
        .map_err(|e| data(format!("{}: {e}", sidecar.display())))?;
    Relation::load_csv(path, &schema).map_err(|e| data(format!("{}: {e}", path.display())))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(args) => gen::run(&args),
        Command::Join(args) => join_cmd::run(&args),
        Command::Bench(args) => bench::run(&args),
        Command::Cost(args) => cost_cmd::run(&args),
    }
}
