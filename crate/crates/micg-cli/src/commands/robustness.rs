//! `micg robustness`: concordance of achievement rankings across
//! weighting schemes plus kernel density curves of the score
//! distribution under each scheme.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use micg_core::{concordance, deprivation_scores, kde_unit_interval};
use serde::Serialize;

use crate::pipeline::{build_weights, score, write_csv_with_header, ScoringArgs, ScoringConfig};
use crate::run::{self, invalid, RunError, RunResult, SchemeArg};

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Schemes to compare, comma separated from equal, custom, pca.
    #[arg(long, default_value = "equal,pca")]
    schemes: String,
    /// Kernel bandwidth; Silverman's rule when absent.
    #[arg(long)]
    bandwidth: Option<f64>,
}

#[derive(Serialize)]
struct Config {
    command: &'static str,
    scoring: ScoringConfig,
    schemes: String,
    bandwidth: Option<f64>,
}

fn parse_schemes(spec: &str) -> Result<Vec<SchemeArg>, RunError> {
    let mut out = Vec::new();
    for tok in spec.split(',') {
        out.push(match tok.trim() {
            "equal" => SchemeArg::Equal,
            "custom" => SchemeArg::Custom,
            "pca" => SchemeArg::Pca,
            other => {
                return Err(RunError::Validation(format!(
                    "unknown scheme `{other}`; expected equal, custom, or pca"
                )))
            }
        });
    }
    if out.len() < 2 {
        return Err(RunError::Validation(
            "need at least two schemes to compare".into(),
        ));
    }
    Ok(out)
}

fn scheme_label(s: SchemeArg) -> &'static str {
    match s {
        SchemeArg::Equal => "equal",
        SchemeArg::Custom => "custom",
        SchemeArg::Pca => "pca",
    }
}

pub fn run(args: &RobustnessArgs, seed: u64) -> RunResult {
    let config = Config {
        command: "robustness",
        scoring: args.scoring.config(),
        schemes: args.schemes.clone(),
        bandwidth: args.bandwidth,
    };
    let header = run::header_line(&config, seed);

    let schemes = parse_schemes(&args.schemes)?;
    // the flattened scoring args carry the policy, cutoff, and custom
    // dimension weights; the scheme flag itself is superseded by --schemes
    let scored = score(&args.scoring)?;

    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    let mut densities: BTreeMap<&'static str, micg_core::DensityCurve> = BTreeMap::new();
    for &scheme in &schemes {
        let weights = build_weights(
            scheme,
            &args.scoring.dimension_weights,
            &scored.catalog,
            &scored.matrix,
        )?;
        let scores =
            deprivation_scores(&scored.matrix, &weights, args.scoring.k).map_err(invalid)?;
        let label = scheme_label(scheme);
        let achievements = scores.achievements();
        let curve = kde_unit_interval(&achievements, args.bandwidth).map_err(invalid)?;
        densities.insert(label, curve);
        series.push((label.to_string(), achievements));
    }

    let matrix = concordance(&series).map_err(invalid)?;
    write_csv_with_header(&args.out_dir.join("concordance.csv"), &header, |w| {
        let mut head = vec!["scheme".to_string()];
        head.extend(matrix.labels.iter().cloned());
        w.write_record(&head)?;
        for (i, label) in matrix.labels.iter().enumerate() {
            let mut rec = vec![label.clone()];
            for j in 0..matrix.labels.len() {
                rec.push(matrix.get(i, j).to_string());
            }
            w.write_record(&rec)?;
        }
        Ok(())
    })?;

    write_csv_with_header(&args.out_dir.join("densities.csv"), &header, |w| {
        w.write_record(["scheme", "x", "density", "bandwidth"])?;
        for (label, curve) in &densities {
            for (x, h) in curve.grid.iter().zip(&curve.heights) {
                w.write_record([
                    *label,
                    &x.to_string(),
                    &h.to_string(),
                    &curve.bandwidth.to_string(),
                ])?;
            }
        }
        Ok(())
    })?;

    eprintln!(
        "compared {} schemes over {} children -> {}",
        schemes.len(),
        scored.scores.children.len(),
        args.out_dir.display()
    );
    Ok(())
}
