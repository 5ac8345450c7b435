//! `sigjoin gen`: seeded input generation.

use std::fs;

use sigjoin_core::{generate_pair, GenSpec};

use crate::args::GenArgs;
use crate::{data, resolve_seed, usage, CliError};

pub fn run(args: &GenArgs) -> Result<(), CliError> {
    if args.rows_r == 0 {
        return Err(usage("--rows-r must be at least 1; the build side cannot be empty"));
    }
    let seed = resolve_seed(args.seed)?;
    let spec = GenSpec {
        card_r: args.rows_r,
        card_s: args.rows_s,
        attr_len: args.attr_len,
        selectivity: args
            .selectivity
            .unwrap_or(1.5 / args.rows_r.max(args.rows_s) as f64),
        row_bytes: args.row_bytes,
        seed,
    };
    let pair = generate_pair(&spec).map_err(usage)?;

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| data(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let r_path = args.out_dir.join("R.csv");
    let s_path = args.out_dir.join("S.csv");
    pair.r
        .emit_csv_path(&r_path)
        .map_err(|e| data(format!("{}: {e}", r_path.display())))?;
    pair.s
        .emit_csv_path(&s_path)
        .map_err(|e| data(format!("{}: {e}", s_path.display())))?;
    for (rel, path) in [(&pair.r, &r_path), (&pair.s, &s_path)] {
        let sidecar = path.with_extension("schema");
        fs::write(&sidecar, rel.schema().to_sidecar_string())
            .map_err(|e| data(format!("{}: {e}", sidecar.display())))?;
    }

    println!(
        "planted {} matching key pairs (target {}); wrote {} ({} rows) and {} ({} rows)",
        pair.planted_pairs,
        spec.target_pairs(),
        r_path.display(),
        pair.r.len(),
        s_path.display(),
        pair.s.len(),
    );
    Ok(())
}
