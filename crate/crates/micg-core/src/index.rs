//! Counting aggregation: weighted deprivation scores, achievement scores,
//! dimension-level profiles, and population frequency tables.
//!
//! The score of child i is D_i = sum_j w_j x_ij over catalog indicator
//! order, A_i = 1 - D_i, and the child counts as multidimensionally
//! deprived when D_i >= k (weak inequality). Under the renormalizing
//! missing policy the weights of observed indicators are rescaled per
//! child to sum one.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::catalog::IndicatorCatalog;
use crate::coding::{DeprivationMatrix, MissingPolicy};
use crate::dataset::ChildDataset;
use crate::weighting::WeightVector;

/// Default poverty cutoff on the weighted deprivation share.
pub const DEFAULT_CUTOFF: f64 = 1.0 / 3.0;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("poverty cutoff must lie in (0, 1], got {0}")]
    InvalidCutoff(f64),
    #[error("weight vector entry `{0}` does not match any matrix indicator")]
    UnknownIndicator(String),
    #[error("child `{0}` has no observed indicator with positive weight")]
    AllCellsMissing(String),
    #[error("matrix has missing cells but its policy is {0:?}; recode first")]
    UnexpectedMissing(MissingPolicy),
    #[error("child `{child}` is missing {what}; cannot build groups")]
    GroupKeyMissing { child: String, what: &'static str },
    #[error("dimension `{dimension}` has no observed indicator in group `{group}`")]
    DimensionAllMissing { dimension: String, group: String },
    #[error("child `{0}` is missing sex or area; cannot tabulate")]
    MissingSexArea(String),
    #[error("no children to summarize")]
    NoChildren,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChildScore {
    pub child_id: String,
    /// Weighted deprivation share in [0, 1].
    pub deprivation: f64,
    /// Achievement, 1 - deprivation.
    pub achievement: f64,
    /// Whether deprivation reached the cutoff.
    pub deprived: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MicgScores {
    pub cutoff: f64,
    pub children: Vec<ChildScore>,
}

impl MicgScores {
    pub fn deprivations(&self) -> Vec<f64> {
        self.children.iter().map(|c| c.deprivation).collect()
    }

    pub fn achievements(&self) -> Vec<f64> {
        self.children.iter().map(|c| c.achievement).collect()
    }
}

/// Score every child in the matrix. Weight entries must be a subset of
/// the matrix indicators; indicators without a weight entry contribute
/// nothing (this is how dropped PCA columns are skipped).
pub fn deprivation_scores(
    matrix: &DeprivationMatrix,
    weights: &WeightVector,
    cutoff: f64,
) -> Result<MicgScores, IndexError> {
    if !(cutoff > 0.0 && cutoff <= 1.0) {
        return Err(IndexError::InvalidCutoff(cutoff));
    }
    for (id, _) in &weights.entries {
        if !matrix.indicator_ids.contains(id) {
            return Err(IndexError::UnknownIndicator(id.clone()));
        }
    }
    if matrix.has_missing() && matrix.policy != MissingPolicy::Renormalize {
        return Err(IndexError::UnexpectedMissing(matrix.policy));
    }

    let w = weights.aligned_to(&matrix.indicator_ids);
    let mut children = Vec::with_capacity(matrix.n_children());
    for i in 0..matrix.n_children() {
        let row = matrix.row(i);
        let d = match matrix.policy {
            MissingPolicy::Renormalize => {
                let mut observed_weight = 0.0;
                let mut deprived_weight = 0.0;
                for (cell, &wj) in row.iter().zip(&w) {
                    if let Some(x) = cell {
                        observed_weight += wj;
                        if *x {
                            deprived_weight += wj;
                        }
                    }
                }
                if observed_weight == 0.0 {
                    return Err(IndexError::AllCellsMissing(matrix.child_ids[i].clone()));
                }
                deprived_weight / observed_weight
            }
            _ => {
                let mut d = 0.0;
                for (cell, &wj) in row.iter().zip(&w) {
                    if *cell == Some(true) {
                        d += wj;
                    }
                }
                d
            }
        };
        // weights sum to one, so d only leaves [0,1] by fp dust
        let d = d.clamp(0.0, 1.0);
        children.push(ChildScore {
            child_id: matrix.child_ids[i].clone(),
            deprivation: d,
            achievement: 1.0 - d,
            deprived: d >= cutoff,
        });
    }
    Ok(MicgScores { cutoff, children })
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexSummary {
    pub n_children: usize,
    /// Share of children at or above the cutoff.
    pub headcount_ratio: f64,
    /// Mean deprivation among those at or above the cutoff.
    pub intensity: Option<f64>,
    pub mean_deprivation: f64,
    pub mean_achievement: f64,
}

pub fn summarize(scores: &MicgScores) -> Result<IndexSummary, IndexError> {
    let n = scores.children.len();
    if n == 0 {
        return Err(IndexError::NoChildren);
    }
    let deprived: Vec<&ChildScore> = scores.children.iter().filter(|c| c.deprived).collect();
    let mean_d = scores.children.iter().map(|c| c.deprivation).sum::<f64>() / n as f64;
    let intensity = if deprived.is_empty() {
        None
    } else {
        Some(deprived.iter().map(|c| c.deprivation).sum::<f64>() / deprived.len() as f64)
    };
    Ok(IndexSummary {
        n_children: n,
        headcount_ratio: deprived.len() as f64 / n as f64,
        intensity,
        mean_deprivation: mean_d,
        mean_achievement: 1.0 - mean_d,
    })
}

/// How a dimension's achievement is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionScoring {
    /// 1 minus the weighted share of deprived indicators in the dimension.
    Graded,
    /// 1 when no indicator in the dimension is deprived, else 0.
    Binary,
}

#[derive(Debug, Clone)]
pub struct DimensionScores {
    pub dimension_names: Vec<String>,
    pub child_ids: Vec<String>,
    pub scoring: DimensionScoring,
    /// Row per child, column per dimension; missing when nothing in the
    /// dimension was observed for that child.
    pub scores: Vec<Vec<Option<f64>>>,
}

/// Per-dimension achievement per child. Within a dimension the retained
/// indicator weights are renormalized over observed cells.
pub fn dimension_achievements(
    matrix: &DeprivationMatrix,
    catalog: &IndicatorCatalog,
    weights: &WeightVector,
    scoring: DimensionScoring,
) -> Result<DimensionScores, IndexError> {
    for (id, _) in &weights.entries {
        if !matrix.indicator_ids.contains(id) {
            return Err(IndexError::UnknownIndicator(id.clone()));
        }
    }
    let w = weights.aligned_to(&matrix.indicator_ids);
    // map matrix columns to catalog dimensions by indicator id
    let dim_of_catalog = catalog.dimension_of_indicators();
    let catalog_ids = catalog.indicator_ids();
    let dim_of_col: Vec<Option<usize>> = matrix
        .indicator_ids
        .iter()
        .map(|id| {
            catalog_ids
                .iter()
                .position(|cid| cid == id)
                .map(|pos| dim_of_catalog[pos])
        })
        .collect();
    let n_dims = catalog.dimension_count();
    let mut scores = Vec::with_capacity(matrix.n_children());
    for i in 0..matrix.n_children() {
        let row = matrix.row(i);
        let mut per_dim: Vec<Option<f64>> = Vec::with_capacity(n_dims);
        for d in 0..n_dims {
            let mut observed_weight = 0.0;
            let mut deprived_weight = 0.0;
            let mut any_deprived = false;
            let mut observed = false;
            for (j, cell) in row.iter().enumerate() {
                if dim_of_col[j] != Some(d) || w[j] == 0.0 {
                    continue;
                }
                if let Some(x) = cell {
                    observed = true;
                    observed_weight += w[j];
                    if *x {
                        deprived_weight += w[j];
                        any_deprived = true;
                    }
                }
            }
            let score = if !observed || observed_weight == 0.0 {
                None
            } else {
                Some(match scoring {
                    DimensionScoring::Graded => 1.0 - deprived_weight / observed_weight,
                    DimensionScoring::Binary => {
                        if any_deprived {
                            0.0
                        } else {
                            1.0
                        }
                    }
                })
            };
            per_dim.push(score);
        }
        scores.push(per_dim);
    }
    Ok(DimensionScores {
        dimension_names: catalog.dimensions.iter().map(|d| d.name.clone()).collect(),
        child_ids: matrix.child_ids.clone(),
        scoring,
        scores,
    })
}

/// Grouping keys for dimension profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    Sex,
    Area,
    Country,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupProfile {
    pub label: String,
    pub n_children: usize,
    /// Mean dimension achievement on a 0..100 scale, in dimension order.
    pub shares: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionProfile {
    pub dimension_names: Vec<String>,
    pub groups: Vec<GroupProfile>,
}

/// Average dimension achievements by group, scaled to 0..100. Children in
/// `scores` are matched to `dataset` records by child id; every scored
/// child must carry the requested keys.
pub fn group_profile(
    scores: &DimensionScores,
    dataset: &ChildDataset,
    keys: &[GroupKey],
) -> Result<DimensionProfile, IndexError> {
    let mut groups: BTreeMap<String, (usize, Vec<f64>, Vec<usize>)> = BTreeMap::new();
    let n_dims = scores.dimension_names.len();
    for (i, child_id) in scores.child_ids.iter().enumerate() {
        let rec = dataset
            .find(child_id)
            .ok_or_else(|| IndexError::GroupKeyMissing {
                child: child_id.clone(),
                what: "a dataset record",
            })?;
        let mut parts: Vec<String> = Vec::with_capacity(keys.len());
        for key in keys {
            let part = match key {
                GroupKey::Sex => rec.sex.map(|s| s.label().to_string()).ok_or_else(|| {
                    IndexError::GroupKeyMissing {
                        child: child_id.clone(),
                        what: "sex",
                    }
                })?,
                GroupKey::Area => rec.area.map(|a| a.label().to_string()).ok_or_else(|| {
                    IndexError::GroupKeyMissing {
                        child: child_id.clone(),
                        what: "area",
                    }
                })?,
                GroupKey::Country => {
                    if rec.country.is_empty() {
                        return Err(IndexError::GroupKeyMissing {
                            child: child_id.clone(),
                            what: "country",
                        });
                    }
                    rec.country.clone()
                }
            };
            parts.push(part);
        }
        let label = if parts.is_empty() {
            "all".to_string()
        } else {
            parts.join("/")
        };
        let entry = groups
            .entry(label)
            .or_insert_with(|| (0, vec![0.0; n_dims], vec![0; n_dims]));
        entry.0 += 1;
        for (d, score) in scores.scores[i].iter().enumerate() {
            if let Some(s) = score {
                entry.1[d] += s;
                entry.2[d] += 1;
            }
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    for (label, (n, sums, counts)) in groups {
        let mut shares = Vec::with_capacity(n_dims);
        for d in 0..n_dims {
            if counts[d] == 0 {
                return Err(IndexError::DimensionAllMissing {
                    dimension: scores.dimension_names[d].clone(),
                    group: label,
                });
            }
            shares.push(100.0 * sums[d] / counts[d] as f64);
        }
        out.push(GroupProfile {
            label,
            n_children: n,
            shares,
        });
    }
    Ok(DimensionProfile {
        dimension_names: scores.dimension_names.clone(),
        groups: out,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FrequencyRow {
    pub country: String,
    pub urban_male: usize,
    pub urban_female: usize,
    pub rural_male: usize,
    pub rural_female: usize,
}

impl FrequencyRow {
    pub fn urban(&self) -> usize {
        self.urban_male + self.urban_female
    }

    pub fn rural(&self) -> usize {
        self.rural_male + self.rural_female
    }

    pub fn total(&self) -> usize {
        self.urban() + self.rural()
    }

    pub fn urban_pct(&self) -> f64 {
        100.0 * self.urban() as f64 / self.total() as f64
    }

    pub fn rural_pct(&self) -> f64 {
        100.0 * self.rural() as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FrequencyTable {
    pub rows: Vec<FrequencyRow>,
}

/// Sample composition by country, area, and sex. Every record must carry
/// sex and area.
pub fn frequency_table(dataset: &ChildDataset) -> Result<FrequencyTable, IndexError> {
    if dataset.is_empty() {
        return Err(IndexError::NoChildren);
    }
    let mut by_country: BTreeMap<String, FrequencyRow> = BTreeMap::new();
    for rec in &dataset.records {
        let (sex, area) = match (rec.sex, rec.area) {
            (Some(s), Some(a)) => (s, a),
            _ => return Err(IndexError::MissingSexArea(rec.child_id.clone())),
        };
        let row = by_country
            .entry(rec.country.clone())
            .or_insert_with(|| FrequencyRow {
                country: rec.country.clone(),
                urban_male: 0,
                urban_female: 0,
                rural_male: 0,
                rural_female: 0,
            });
        use crate::dataset::{Area, Sex};
        match (area, sex) {
            (Area::Urban, Sex::Male) => row.urban_male += 1,
            (Area::Urban, Sex::Female) => row.urban_female += 1,
            (Area::Rural, Sex::Male) => row.rural_male += 1,
            (Area::Rural, Sex::Female) => row.rural_female += 1,
        }
    }
    Ok(FrequencyTable {
        rows: by_country.into_values().collect(),
    })
}
