//! The catalog-to-scores pipeline shared by index, robustness, frontier,
//! regress, and the spider chart.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use clap::Args;
use micg_core::{
    code_deprivations, custom_weights, deprivation_scores, equal_nested_weights, pca_weights,
    ChildDataset, DeprivationMatrix, IndicatorCatalog, MicgScores, MissingPolicy, WeightVector,
    DEFAULT_CUTOFF,
};
use serde::Serialize;

use crate::run::{self, invalid, PolicyArg, RunError, SchemeArg};

/// Flags shared by every command that scores children.
#[derive(Debug, Args)]
pub struct ScoringArgs {
    /// Indicator catalog JSON.
    #[arg(long)]
    pub catalog: PathBuf,
    /// Child records CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Missing-data policy.
    #[arg(long, value_enum, default_value_t = PolicyArg::ExcludeChild)]
    pub policy: PolicyArg,
    /// Weighting scheme.
    #[arg(long, value_enum, default_value_t = SchemeArg::Equal)]
    pub weights: SchemeArg,
    /// Dimension weight for the custom scheme, name=value; repeatable.
    #[arg(long = "dimension-weight", value_parser = run::parse_kv)]
    pub dimension_weights: Vec<(String, f64)>,
    /// Deprivation cutoff k.
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    pub k: f64,
    /// Catalog parameter override, name=value; repeatable.
    #[arg(long = "param", value_parser = run::parse_kv)]
    pub params: Vec<(String, f64)>,
}

/// The scoring part of a run configuration, hashed into output headers.
#[derive(Serialize)]
pub struct ScoringConfig {
    pub catalog: String,
    pub data: String,
    pub policy: PolicyArg,
    pub weights: SchemeArg,
    pub dimension_weights: BTreeMap<String, f64>,
    pub k: f64,
    pub params: BTreeMap<String, f64>,
}

impl ScoringArgs {
    pub fn config(&self) -> ScoringConfig {
        ScoringConfig {
            catalog: self.catalog.display().to_string(),
            data: self.data.display().to_string(),
            policy: self.policy,
            weights: self.weights,
            dimension_weights: self.dimension_weights.iter().cloned().collect(),
            k: self.k,
            params: self.params.iter().cloned().collect(),
        }
    }
}

pub struct Scored {
    pub catalog: IndicatorCatalog,
    /// Records for exactly the children in the matrix, in matrix order.
    pub dataset: ChildDataset,
    pub matrix: DeprivationMatrix,
    pub weights: WeightVector,
    pub scores: MicgScores,
    pub ingest_warnings: usize,
}

pub fn build_weights(
    scheme: SchemeArg,
    dimension_weights: &[(String, f64)],
    catalog: &IndicatorCatalog,
    matrix: &DeprivationMatrix,
) -> Result<WeightVector, RunError> {
    match scheme {
        SchemeArg::Equal => Ok(equal_nested_weights(catalog)),
        SchemeArg::Custom => {
            if dimension_weights.is_empty() {
                return Err(RunError::Validation(
                    "custom weighting needs --dimension-weight name=value per dimension".into(),
                ));
            }
            let map: BTreeMap<String, f64> = dimension_weights.iter().cloned().collect();
            custom_weights(catalog, &map).map_err(invalid)
        }
        SchemeArg::Pca => pca_weights(matrix).map_err(invalid),
    }
}

pub fn score(args: &ScoringArgs) -> Result<Scored, RunError> {
    let params: BTreeMap<String, f64> = args.params.iter().cloned().collect();
    let catalog = run::load_catalog(&args.catalog, &params)?;
    let ingest = run::load_dataset(&args.data, &catalog)?;
    let policy: MissingPolicy = args.policy.into();
    let matrix = code_deprivations(&ingest.dataset, &catalog, policy).map_err(invalid)?;
    let weights = build_weights(args.weights, &args.dimension_weights, &catalog, &matrix)?;
    let scores = deprivation_scores(&matrix, &weights, args.k).map_err(invalid)?;

    let kept: BTreeSet<&String> = matrix.child_ids.iter().collect();
    let dataset = ChildDataset {
        records: ingest
            .dataset
            .records
            .into_iter()
            .filter(|r| kept.contains(&r.child_id))
            .collect(),
    };
    Ok(Scored {
        catalog,
        dataset,
        matrix,
        weights,
        scores,
        ingest_warnings: ingest.numeric_warnings,
    })
}

/// CSV body assembled in memory so a header comment can prefix it.
pub fn csv_bytes<F>(fill: F) -> Result<Vec<u8>, RunError>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<(), csv::Error>,
{
    let mut buf = Vec::new();
    let mut w = csv::Writer::from_writer(&mut buf);
    fill(&mut w).map_err(invalid)?;
    w.flush().map_err(invalid)?;
    drop(w);
    Ok(buf)
}

pub fn write_csv_with_header<F>(path: &Path, header: &str, fill: F) -> Result<(), RunError>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<(), csv::Error>,
{
    let body = csv_bytes(fill)?;
    let mut out = header.as_bytes().to_vec();
    out.extend_from_slice(&body);
    run::write_file(path, &out)
}

/// Empty-cell representation for optional numbers in CSV output.
pub fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
