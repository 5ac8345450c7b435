//! `sigjoin bench`: attribute-length sweep timing the baseline and
//! signature hash joins on identical generated data.
//!
//! Warmup runs are discarded; each reported figure is the median over
//! the timed repetitions. The speedup column is baseline total time over
//! signature total time on the same inputs, so values above 1 mean the
//! signature join won.

use std::io::Write;

use sigjoin_core::{
    execute_join, generate_pair, GenSpec, GeneratedPair, JoinAlgorithm, JoinSpec, MatchMode,
};

use crate::args::BenchArgs;
use crate::{data, open_output, resolve_seed, usage, CliError};

pub const CSV_HEADER: &str = "algo,attr_len,rows_r,rows_s,build_ms,probe_ms,total_ms,\
                              peak_table_bytes,result_rows,collisions,speedup,seed,selectivity,row_bytes";

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub rows_r: u64,
    pub rows_s: u64,
    pub attr_lens: Vec<usize>,
    pub selectivity: Option<f64>,
    pub row_bytes: usize,
    pub seed: u64,
    pub repetitions: usize,
    pub warmups: usize,
    pub mode: MatchMode,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            rows_r: 10_000,
            rows_s: 20_000,
            attr_lens: vec![2, 7, 10, 50, 100],
            selectivity: None,
            row_bytes: 128,
            seed: 42,
            repetitions: 5,
            warmups: 1,
            mode: MatchMode::Verify,
        }
    }
}

/// One output row: medians for one algorithm at one key length, plus the
/// generating parameters so the row is reproducible on its own.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub algo: JoinAlgorithm,
    pub attr_len: usize,
    pub rows_r: u64,
    pub rows_s: u64,
    pub build_ns: u64,
    pub probe_ns: u64,
    pub total_ns: u64,
    pub peak_table_bytes: u64,
    pub result_rows: u64,
    pub collisions: u64,
    pub speedup: f64,
    pub seed: u64,
    pub selectivity: f64,
    pub row_bytes: usize,
}

impl SweepRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:.3},{:.3},{:.3},{},{},{},{:.3},{},{},{}",
            self.algo,
            self.attr_len,
            self.rows_r,
            self.rows_s,
            self.build_ns as f64 / 1e6,
            self.probe_ns as f64 / 1e6,
            self.total_ns as f64 / 1e6,
            self.peak_table_bytes,
            self.result_rows,
            self.collisions,
            self.speedup,
            self.seed,
            self.selectivity,
            self.row_bytes,
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct Measured {
    build_ns: u64,
    probe_ns: u64,
    total_ns: u64,
    peak_table_bytes: u64,
    result_rows: u64,
    collisions: u64,
}

fn median(mut samples: Vec<u64>) -> u64 {
    samples.sort_unstable();
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2
    }
}

fn measure(
    pair: &GeneratedPair,
    spec: &JoinSpec,
    warmups: usize,
    repetitions: usize,
) -> Result<Measured, CliError> {
    for _ in 0..warmups {
        execute_join(&pair.r, &pair.s, spec).map_err(data)?;
    }
    let mut builds = Vec::with_capacity(repetitions);
    let mut probes = Vec::with_capacity(repetitions);
    let mut totals = Vec::with_capacity(repetitions);
    let mut last = None;
    for _ in 0..repetitions {
        let result = execute_join(&pair.r, &pair.s, spec).map_err(data)?;
        builds.push(result.stats.build_ns);
        probes.push(result.stats.probe_ns);
        totals.push(result.stats.build_ns + result.stats.probe_ns);
        last = Some(result);
    }
    let last = last.expect("at least one repetition");
    Ok(Measured {
        build_ns: median(builds),
        probe_ns: median(probes),
        total_ns: median(totals),
        peak_table_bytes: last.stats.peak_table_bytes,
        result_rows: last.pairs.len() as u64,
        collisions: last.stats.collisions,
    })
}

/// Runs the whole sweep, streaming human-readable progress to
/// `progress`. Rows come out two per attribute length, baseline first.
pub fn run_sweep(cfg: &SweepConfig, mut progress: impl Write) -> Result<Vec<SweepRow>, CliError> {
    if cfg.attr_lens.is_empty() {
        return Err(usage("--attr-lens must name at least one length"));
    }
    if cfg.repetitions == 0 {
        return Err(usage("--repetitions must be at least 1"));
    }
    if cfg.rows_r == 0 {
        return Err(usage("--rows-r must be at least 1; the build side cannot be empty"));
    }
    if cfg.repetitions < 3 {
        writeln!(
            progress,
            "note: fewer than 3 repetitions; medians are indicative only"
        )
        .map_err(data)?;
    }

    let baseline_spec = JoinSpec::for_algorithm(JoinAlgorithm::HashBaseline);
    let signature_spec = JoinSpec {
        mode: Some(cfg.mode),
        ..JoinSpec::for_algorithm(JoinAlgorithm::HashSignature)
    };

    let mut rows = Vec::with_capacity(cfg.attr_lens.len() * 2);
    for &attr_len in &cfg.attr_lens {
        let spec = GenSpec {
            card_r: cfg.rows_r,
            card_s: cfg.rows_s,
            attr_len,
            selectivity: cfg
                .selectivity
                .unwrap_or(1.5 / cfg.rows_r.max(cfg.rows_s) as f64),
            row_bytes: cfg.row_bytes,
            seed: cfg.seed,
        };
        let pair = generate_pair(&spec).map_err(usage)?;
        writeln!(
            progress,
            "attr_len {attr_len}: {}x{} rows, {} planted pairs",
            pair.r.len(),
            pair.s.len(),
            pair.planted_pairs
        )
        .map_err(data)?;

        let base = measure(&pair, &baseline_spec, cfg.warmups, cfg.repetitions)?;
        let sig = measure(&pair, &signature_spec, cfg.warmups, cfg.repetitions)?;
        let speedup = base.total_ns as f64 / sig.total_ns as f64;
        writeln!(
            progress,
            "attr_len {attr_len}: baseline {:.3} ms, signature {:.3} ms, speedup {speedup:.3}",
            base.total_ns as f64 / 1e6,
            sig.total_ns as f64 / 1e6,
        )
        .map_err(data)?;

        let row = |algo: JoinAlgorithm, m: Measured, speedup: f64| SweepRow {
            algo,
            attr_len,
            rows_r: cfg.rows_r,
            rows_s: cfg.rows_s,
            build_ns: m.build_ns,
            probe_ns: m.probe_ns,
            total_ns: m.total_ns,
            peak_table_bytes: m.peak_table_bytes,
            result_rows: m.result_rows,
            collisions: m.collisions,
            speedup,
            seed: cfg.seed,
            selectivity: spec.selectivity,
            row_bytes: cfg.row_bytes,
        };
        rows.push(row(JoinAlgorithm::HashBaseline, base, 1.0));
        rows.push(row(signature_spec.algorithm, sig, speedup));
    }
    Ok(rows)
}

pub fn run(args: &BenchArgs) -> Result<(), CliError> {
    let cfg = SweepConfig {
        rows_r: args.rows_r,
        rows_s: args.rows_s,
        attr_lens: args.attr_lens.clone(),
        selectivity: args.selectivity,
        row_bytes: args.row_bytes,
        seed: resolve_seed(args.seed)?,
        repetitions: args.repetitions,
        warmups: args.warmups,
        mode: if args.trust {
            MatchMode::Trust
        } else {
            MatchMode::Verify
        },
    };
    let rows = run_sweep(&cfg, std::io::stderr())?;
    let mut out = open_output(&args.out)?;
    writeln!(out, "{CSV_HEADER}").map_err(data)?;
    for row in &rows {
        writeln!(out, "{}", row.to_csv_line()).map_err(data)?;
    }
    out.flush().map_err(data)
}
