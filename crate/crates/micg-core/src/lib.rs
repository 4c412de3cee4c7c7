//! Multidimensional index of child growth.
//!
//! The crate covers the full pipeline from raw survey rows to reported
//! figures:
//!
//! * [`catalog`] and [`expr`] define the indicator catalog and its cutoff
//!   rule grammar; [`dataset`] ingests per-child CSV rows.
//! * [`coding`] turns records into a deprivation status matrix under a
//!   chosen missing-data policy.
//! * [`weighting`] produces equal nested, custom, or principal-component
//!   indicator weights, and [`index`] aggregates weighted counts into
//!   child scores, headcount and intensity summaries, and dimension
//!   profiles.
//! * [`stats`] holds rank concordance and the bounded kernel density
//!   estimator used for robustness checks.
//! * [`frontier`] estimates a stochastic frontier of achievement by Gibbs
//!   sampling and derives per-child opportunity distributions;
//!   [`regress`] fits the companion least-squares and quantile
//!   regressions.
//! * [`ecodyn`] integrates the coupled ecological dynamics, embeds
//!   trajectories in curved geometry, and traces geodesics.
//! * [`charts`] renders deterministic SVG figures; [`synth`] generates
//!   seeded cohorts with known ground truth.
//!
//! Everything is deterministic given explicit seeds: repeated runs with
//! the same inputs produce byte-identical outputs.

pub mod catalog;
pub mod charts;
pub mod coding;
pub mod dataset;
pub mod ecodyn;
pub mod expr;
pub mod frontier;
pub mod index;
pub mod linalg;
pub mod math;
pub mod regress;
pub mod simplex;
pub mod stats;
pub mod synth;
pub mod weighting;

pub use catalog::{parse_catalog, parse_catalog_with_params, reference_catalog, IndicatorCatalog};
pub use coding::{code_deprivations, DeprivationMatrix, MissingPolicy};
pub use dataset::{ingest_records, Area, ChildDataset, ChildRecord, Sex};
pub use expr::{parse_arith, parse_rule, Value};
pub use frontier::{fit_frontier, left_behind, McmcConfig, OpportunityMode, PosteriorDraws};
pub use index::{deprivation_scores, summarize, IndexSummary, MicgScores, DEFAULT_CUTOFF};
pub use regress::{ols_fit, quantile_fit, quantile_fits, RegressionFit};
pub use stats::{concordance, kde_unit_interval, spearman, DensityCurve};
pub use weighting::{
    custom_weights, equal_nested_weights, pca_weights, WeightScheme, WeightVector,
};
