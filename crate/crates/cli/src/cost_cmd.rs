//! `sigjoin cost`: cost-model evaluation and parameter sweeps.

use std::fs;
use std::io::Write;

use sigjoin_core::CostParams;

use crate::args::CostArgs;
use crate::{data, open_output, usage, CliError};

const SWEEP_KEYS: &str = "b, k, r_area, m, n, loop_factor";

fn set_param(params: &mut CostParams, key: &str, value: u64) -> Result<(), CliError> {
    match key {
        "b" => params.b = value,
        "k" => params.k = value,
        "r_area" => params.r_area = value,
        "m" => params.m = value,
        "n" => params.n = value,
        "loop_factor" => params.loop_factor = value,
        _ => return Err(usage(format!("unknown sweep parameter {key:?}; one of {SWEEP_KEYS}"))),
    }
    Ok(())
}

pub fn run(args: &CostArgs) -> Result<(), CliError> {
    let params = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| data(format!("cannot read {}: {e}", path.display())))?;
            CostParams::from_config_str(&text)
                .map_err(|e| data(format!("{}: {e}", path.display())))?
        }
        None => CostParams::default(),
    };

    let mut out = open_output(&args.out)?;
    match &args.sweep {
        None => {
            let breakdown = params.evaluate();
            write!(out, "{}", breakdown.to_csv()).map_err(data)?;
            out.flush().map_err(data)?;
            eprintln!("{breakdown}");
        }
        Some(key) => {
            let (from, to) = match (args.from, args.to) {
                (Some(from), Some(to)) => (from, to),
                _ => return Err(usage("--sweep requires both --from and --to")),
            };
            if args.step == 0 {
                return Err(usage("--step must be at least 1"));
            }
            if from > to {
                return Err(usage(format!("--from {from} exceeds --to {to}")));
            }
            let mut scratch = params;
            set_param(&mut scratch, key, from)?;

            let names: Vec<&str> = params.evaluate().rows().iter().map(|(n, _)| *n).collect();
            writeln!(out, "{key},{}", names.join(",")).map_err(data)?;
            let mut value = from;
            loop {
                let mut point = params;
                set_param(&mut point, key, value)?;
                point
                    .validate()
                    .map_err(|e| data(format!("sweep point {key}={value}: {e}")))?;
                let breakdown = point.evaluate();
                let cells: Vec<String> = breakdown
                    .rows()
                    .iter()
                    .map(|(_, v)| v.to_string())
                    .collect();
                writeln!(out, "{value},{}", cells.join(",")).map_err(data)?;
                match value.checked_add(args.step) {
                    Some(next) if next <= to => value = next,
                    _ => break,
                }
            }
            out.flush().map_err(data)?;
        }
    }
    Ok(())
}
