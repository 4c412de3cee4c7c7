//! `micg regress`: least-squares and quantile fits of achievement on
//! covariates.

use std::path::PathBuf;

use clap::Args;
use micg_core::frontier::design_from_dataset;
use micg_core::{ols_fit, quantile_fits};
use serde::Serialize;

use crate::commands::frontier::parse_covariates;
use crate::pipeline::{opt_num, score, write_csv_with_header, ScoringArgs, ScoringConfig};
use crate::run::{self, invalid, RunError, RunResult};

#[derive(Debug, Args)]
pub struct RegressArgs {
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    /// Design covariates, comma separated from rural, female.
    #[arg(long, default_value = "rural,female")]
    covariates: String,
    /// Quantile level; repeatable for several fits.
    #[arg(long = "tau")]
    taus: Vec<f64>,
}

#[derive(Serialize)]
struct Config {
    command: &'static str,
    scoring: ScoringConfig,
    covariates: String,
    taus: Vec<f64>,
}

pub fn run(args: &RegressArgs, seed: u64) -> RunResult {
    let config = Config {
        command: "regress",
        scoring: args.scoring.config(),
        covariates: args.covariates.clone(),
        taus: args.taus.clone(),
    };
    let header = run::header_line(&config, seed);
    for &tau in &args.taus {
        if !(0.0 < tau && tau < 1.0) {
            return Err(RunError::Validation(format!(
                "--tau {tau} is outside (0, 1)"
            )));
        }
    }

    let covariates = parse_covariates(&args.covariates)?;
    let scored = score(&args.scoring)?;
    let (design, names) = design_from_dataset(&scored.dataset, &covariates).map_err(invalid)?;
    let achievements = scored.scores.achievements();

    let ols = ols_fit(&design, &achievements).map_err(invalid)?;
    let quantiles = quantile_fits(&design, &achievements, &args.taus).map_err(invalid)?;

    write_csv_with_header(&args.out, &header, |w| {
        w.write_record([
            "method",
            "tau",
            "term",
            "estimate",
            "std_error",
            "objective",
        ])?;
        let se = ols.std_errors.as_deref().unwrap_or(&[]);
        for (j, name) in names.iter().enumerate() {
            w.write_record([
                "ols",
                "",
                name,
                &ols.coefficients[j].to_string(),
                &opt_num(se.get(j).copied()),
                "",
            ])?;
        }
        for fit in &quantiles {
            let tau = fit.tau.expect("quantile fits carry tau");
            for (j, name) in names.iter().enumerate() {
                w.write_record([
                    "quantile",
                    &tau.to_string(),
                    name,
                    &fit.coefficients[j].to_string(),
                    "",
                    &opt_num(fit.objective),
                ])?;
            }
        }
        Ok(())
    })?;

    eprintln!(
        "fitted ols plus {} quantile levels on {} children -> {}",
        args.taus.len(),
        achievements.len(),
        args.out.display()
    );
    Ok(())
}
