//! Flag definitions for the `sigjoin` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sigjoin_core::{JoinAlgorithm, MatchMode};

/// Equi-join driver: generates seeded inputs, runs single joins, sweeps
/// join-attribute lengths against a baseline, and evaluates the analytic
/// cost model.
#[derive(Debug, Parser)]
#[command(name = "sigjoin", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded pair of join inputs as CSVs with schema sidecars
    Gen(GenArgs),
    /// Join two CSV relations and write the matched rows
    Join(JoinArgs),
    /// Sweep join-attribute lengths, timing baseline and signature joins
    Bench(BenchArgs),
    /// Evaluate the hash-join cost model from a key=value config
    Cost(CostArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Rows in the build-side relation R (at least 1, at most --rows-s)
    #[arg(long, default_value_t = 10_000)]
    pub rows_r: u64,

    /// Rows in the probe-side relation S
    #[arg(long, default_value_t = 20_000)]
    pub rows_s: u64,

    /// Join-key length in bytes
    #[arg(long, default_value_t = 10)]
    pub attr_len: usize,

    /// Join selectivity factor; default 1.5 / max(rows_r, rows_s)
    #[arg(long)]
    pub selectivity: Option<f64>,

    /// Approximate row width in bytes
    #[arg(long, default_value_t = 128)]
    pub row_bytes: usize,

    /// Generator seed; $SIGJOIN_SEED, then 42, when absent
    #[arg(long)]
    pub seed: Option<u64>,

    /// Directory receiving R.csv, S.csv and their .schema sidecars
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    /// Quadratic scan; the exactness oracle
    NestedLoop,
    /// In-memory hash join keyed on raw key bytes
    #[value(alias = "hash-baseline")]
    Hash,
    /// In-memory hash join keyed on key signatures
    #[value(alias = "hash-signature")]
    SigHash,
    /// Partitioned hash join on raw key bytes
    #[value(alias = "grace-baseline")]
    Grace,
    /// Partitioned hash join on key signatures
    #[value(alias = "grace-signature")]
    SigGrace,
}

impl AlgoArg {
    pub fn algorithm(self) -> JoinAlgorithm {
        match self {
            AlgoArg::NestedLoop => JoinAlgorithm::NestedLoop,
            AlgoArg::Hash => JoinAlgorithm::HashBaseline,
            AlgoArg::SigHash => JoinAlgorithm::HashSignature,
            AlgoArg::Grace => JoinAlgorithm::GraceBaseline,
            AlgoArg::SigGrace => JoinAlgorithm::GraceSignature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Byte-compare keys after a signature match; exact output
    Verify,
    /// Emit on signature equality alone
    Trust,
}

impl ModeArg {
    pub fn mode(self) -> MatchMode {
        match self {
            ModeArg::Verify => MatchMode::Verify,
            ModeArg::Trust => MatchMode::Trust,
        }
    }
}

#[derive(Debug, Args)]
pub struct JoinArgs {
    /// Left input CSV; expects a .schema sidecar next to it
    #[arg(long)]
    pub left: PathBuf,

    /// Right input CSV; expects a .schema sidecar next to it
    #[arg(long)]
    pub right: PathBuf,

    /// Key column in the left input
    #[arg(long, default_value = "key")]
    pub left_key: String,

    /// Key column in the right input
    #[arg(long, default_value = "key")]
    pub right_key: String,

    /// Join algorithm
    #[arg(long, value_enum, default_value_t = AlgoArg::SigHash)]
    pub algo: AlgoArg,

    /// Signature handling; defaults to verify for signature algorithms
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,

    /// Partition count for the grace algorithms
    #[arg(long, default_value_t = 8)]
    pub partitions: usize,

    /// Signature symbol width in bits (8 or 16)
    #[arg(long, default_value_t = 16)]
    pub field_width: u8,

    /// Signature components per key
    #[arg(long, default_value_t = 2)]
    pub n_sig: usize,

    /// Write full concatenated tuples instead of row-index pairs
    #[arg(long)]
    pub materialize: bool,

    /// Output CSV path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Rows in the build-side relation R
    #[arg(long, default_value_t = 10_000)]
    pub rows_r: u64,

    /// Rows in the probe-side relation S
    #[arg(long, default_value_t = 20_000)]
    pub rows_s: u64,

    /// Join-key lengths to sweep, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 7, 10, 50, 100])]
    pub attr_lens: Vec<usize>,

    /// Join selectivity factor; default 1.5 / max(rows_r, rows_s)
    #[arg(long)]
    pub selectivity: Option<f64>,

    /// Approximate row width in bytes
    #[arg(long, default_value_t = 128)]
    pub row_bytes: usize,

    /// Generator seed; $SIGJOIN_SEED, then 42, when absent
    #[arg(long)]
    pub seed: Option<u64>,

    /// Timed runs per algorithm and length; medians are reported
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,

    /// Untimed runs discarded before measuring
    #[arg(long, default_value_t = 1)]
    pub warmups: usize,

    /// Time the signature join in trust mode instead of verify
    #[arg(long)]
    pub trust: bool,

    /// Output CSV path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    /// key=value config file; built-in default profile when absent
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Parameter to sweep: b, k, r_area, m, n or loop_factor
    #[arg(long)]
    pub sweep: Option<String>,

    /// First swept value, inclusive
    #[arg(long)]
    pub from: Option<u64>,

    /// Last swept value, inclusive
    #[arg(long)]
    pub to: Option<u64>,

    /// Sweep stride
    #[arg(long, default_value_t = 1)]
    pub step: u64,

    /// Output CSV path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}
