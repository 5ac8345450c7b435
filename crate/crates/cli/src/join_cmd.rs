//! `sigjoin join`: one join run over CSV inputs.

use std::io::Write;

use sigjoin_core::{execute_join, JoinSpec, Relation, SigConfig, SignatureBase};

use crate::args::JoinArgs;
use crate::{data, join_error, load_relation, open_output, usage, CliError};

pub fn run(args: &JoinArgs) -> Result<(), CliError> {
    let algorithm = args.algo.algorithm();
    let mode = match args.mode {
        Some(m) => {
            if !algorithm.is_signature() {
                return Err(usage(format!(
                    "--mode applies to signature algorithms only, not {algorithm}"
                )));
            }
            Some(m.mode())
        }
        None => algorithm
            .is_signature()
            .then_some(sigjoin_core::MatchMode::Verify),
    };
    let sig = SigConfig {
        field_width: args.field_width,
        n_sig: args.n_sig,
    };
    if algorithm.is_signature() {
        SignatureBase::new(sig.field_width, sig.n_sig).map_err(usage)?;
    }
    let spec = JoinSpec {
        left_key: args.left_key.clone(),
        right_key: args.right_key.clone(),
        algorithm,
        mode,
        partitions: args.partitions,
        sig,
    };
    spec.validate().map_err(join_error)?;

    let r = load_relation(&args.left)?;
    let s = load_relation(&args.right)?;
    let result = execute_join(&r, &s, &spec).map_err(join_error)?;

    let out = open_output(&args.out)?;
    if args.materialize {
        write_tuples(out, &r, &s, &result.pairs)?;
    } else {
        write_pairs(out, &result.pairs)?;
    }

    let stats = &result.stats;
    let mut line = format!("algo={algorithm}");
    if let Some(m) = mode {
        line.push_str(&format!(
            " mode={}",
            match m {
                sigjoin_core::MatchMode::Verify => "verify",
                sigjoin_core::MatchMode::Trust => "trust",
            }
        ));
    }
    line.push_str(&format!(
        " rows_r={} rows_s={} build_ms={:.3} probe_ms={:.3} result_rows={} \
         signature_matches={} verified_matches={} collisions={} peak_table_bytes={}",
        r.len(),
        s.len(),
        stats.build_ns as f64 / 1e6,
        stats.probe_ns as f64 / 1e6,
        result.pairs.len(),
        stats.signature_matches,
        stats.verified_matches,
        stats.collisions,
        stats.peak_table_bytes,
    ));
    eprintln!("{line}");
    Ok(())
}

/// Row-index pairs, 0-based, in probe scan order.
fn write_pairs(mut out: Box<dyn Write>, pairs: &[(u32, u32)]) -> Result<(), CliError> {
    writeln!(out, "r_row,s_row").map_err(data)?;
    for (i, j) in pairs {
        writeln!(out, "{i},{j}").map_err(data)?;
    }
    out.flush().map_err(data)
}

/// Full concatenated tuples. Columns carry r_/s_ prefixes so the header
/// stays unambiguous when both sides share column names.
fn write_tuples(
    out: Box<dyn Write>,
    r: &Relation,
    s: &Relation,
    pairs: &[(u32, u32)],
) -> Result<(), CliError> {
    let mut writer = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(out);
    let header: Vec<String> = r
        .schema()
        .columns()
        .iter()
        .map(|(name, _)| format!("r_{name}"))
        .chain(s.schema().columns().iter().map(|(name, _)| format!("s_{name}")))
        .collect();
    writer.write_record(&header).map_err(data)?;
    for &(i, j) in pairs {
        let record: Vec<String> = r.rows()[i as usize]
            .iter()
            .chain(s.rows()[j as usize].iter())
            .map(|v| v.render())
            .collect();
        writer.write_record(&record).map_err(data)?;
    }
    writer.flush().map_err(data)
}
