//! `micg code`: raw records to a deprivation matrix CSV.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use micg_core::code_deprivations;
use serde::Serialize;

use crate::pipeline::write_csv_with_header;
use crate::run::{self, invalid, PolicyArg, RunResult};

#[derive(Debug, Args)]
pub struct CodeArgs {
    /// Indicator catalog JSON.
    #[arg(long)]
    catalog: PathBuf,
    /// Child records CSV.
    #[arg(long)]
    data: PathBuf,
    /// Output matrix CSV.
    #[arg(long)]
    out: PathBuf,
    /// Missing-data policy.
    #[arg(long, value_enum, default_value_t = PolicyArg::ExcludeChild)]
    policy: PolicyArg,
    /// Catalog parameter override, name=value; repeatable.
    #[arg(long = "param", value_parser = run::parse_kv)]
    params: Vec<(String, f64)>,
}

#[derive(Serialize)]
struct Config {
    command: &'static str,
    catalog: String,
    data: String,
    policy: PolicyArg,
    params: BTreeMap<String, f64>,
}

pub fn run(args: &CodeArgs, seed: u64) -> RunResult {
    let config = Config {
        command: "code",
        catalog: args.catalog.display().to_string(),
        data: args.data.display().to_string(),
        policy: args.policy,
        params: args.params.iter().cloned().collect(),
    };
    let header = run::header_line(&config, seed);

    let params: BTreeMap<String, f64> = args.params.iter().cloned().collect();
    let catalog = run::load_catalog(&args.catalog, &params)?;
    let ingest = run::load_dataset(&args.data, &catalog)?;
    if ingest.numeric_warnings > 0 {
        eprintln!(
            "note: {} numeric cells failed to parse and were treated as missing",
            ingest.numeric_warnings
        );
    }
    let matrix =
        code_deprivations(&ingest.dataset, &catalog, args.policy.into()).map_err(invalid)?;

    write_csv_with_header(&args.out, &header, |w| {
        let mut head = vec!["child_id".to_string()];
        head.extend(matrix.indicator_ids.iter().cloned());
        w.write_record(&head)?;
        for i in 0..matrix.n_children() {
            let mut rec = vec![matrix.child_ids[i].clone()];
            for cell in matrix.row(i) {
                rec.push(match cell {
                    Some(true) => "1".to_string(),
                    Some(false) => "0".to_string(),
                    None => String::new(),
                });
            }
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    eprintln!(
        "coded {} children x {} indicators -> {}",
        matrix.n_children(),
        matrix.n_indicators(),
        args.out.display()
    );
    Ok(())
}
