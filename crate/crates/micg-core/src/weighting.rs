//! Indicator weighting schemes: equal nested weights, custom dimension
//! weights, and data-driven weights from the first principal component of
//! the deprivation matrix correlation structure.
//!
//! Every scheme returns weights aligned to catalog indicator order that
//! sum to one. The principal-component scheme drops zero-variance
//! indicators; dropped ids are recorded so audits can show exactly what
//! was weighted.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::catalog::IndicatorCatalog;
use crate::coding::DeprivationMatrix;
use crate::linalg::{self, LinalgError, Mat};

/// Convergence threshold for the Jacobi eigensolver used on the
/// indicator correlation matrix.
pub const PCA_EIGEN_TOL: f64 = 1e-10;
/// Sweep budget for the eigensolver.
pub const PCA_EIGEN_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("unknown dimension `{0}` in custom weights")]
    UnknownDimension(String),
    #[error("no weight given for dimension `{0}`")]
    MissingDimension(String),
    #[error("dimension `{0}` has a negative weight")]
    NegativeWeight(String),
    #[error("custom dimension weights sum to zero")]
    ZeroTotal,
    #[error("weights need at least two children, got {0}")]
    TooFewChildren(usize),
    #[error("deprivation matrix has missing cells; impute or recode before weighting")]
    MissingCells,
    #[error("fewer than two indicators vary; correlation weights are undefined")]
    TooFewVaryingIndicators,
    #[error("eigensolver failed: {0}")]
    Eigen(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    EqualNested,
    Custom,
    PrincipalComponent,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightVector {
    pub scheme: WeightScheme,
    /// (indicator id, weight) in catalog order. Dropped indicators are absent.
    pub entries: Vec<(String, f64)>,
    /// Indicators excluded by the scheme (zero variance under PCA).
    pub dropped: Vec<String>,
}

impl WeightVector {
    pub fn get(&self, indicator_id: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(id, _)| id == indicator_id)
            .map(|(_, w)| *w)
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }

    /// Weights aligned to the given indicator order; absent ids get zero.
    pub fn aligned_to(&self, indicator_ids: &[String]) -> Vec<f64> {
        indicator_ids
            .iter()
            .map(|id| self.get(id).unwrap_or(0.0))
            .collect()
    }

    /// Deterministic audit document: scheme, per-indicator weights in
    /// catalog order, and any dropped indicators.
    pub fn audit_json(&self) -> String {
        #[derive(Serialize)]
        struct Audit<'a> {
            scheme: &'a WeightScheme,
            weights: Vec<AuditEntry<'a>>,
            dropped: &'a [String],
            total: f64,
        }
        #[derive(Serialize)]
        struct AuditEntry<'a> {
            indicator: &'a str,
            weight: f64,
        }
        let audit = Audit {
            scheme: &self.scheme,
            weights: self
                .entries
                .iter()
                .map(|(id, w)| AuditEntry {
                    indicator: id,
                    weight: *w,
                })
                .collect(),
            dropped: &self.dropped,
            total: self.sum(),
        };
        serde_json::to_string_pretty(&audit).expect("weight audit serializes")
    }
}

/// Equal nested weights: each dimension gets 1/(number of dimensions),
/// split equally across its indicators.
pub fn equal_nested_weights(catalog: &IndicatorCatalog) -> WeightVector {
    let d = catalog.dimension_count() as f64;
    let mut entries = Vec::with_capacity(catalog.indicator_count());
    for dim in &catalog.dimensions {
        let w = 1.0 / d / dim.indicators.len() as f64;
        for ind in &dim.indicators {
            entries.push((ind.id.clone(), w));
        }
    }
    WeightVector {
        scheme: WeightScheme::EqualNested,
        entries,
        dropped: Vec::new(),
    }
}

/// Custom non-negative dimension weights, normalized to sum one, split
/// equally across each dimension's indicators. Every catalog dimension
/// must be present in `dimension_weights` and no extras are allowed.
pub fn custom_weights(
    catalog: &IndicatorCatalog,
    dimension_weights: &BTreeMap<String, f64>,
) -> Result<WeightVector, WeightError> {
    for name in dimension_weights.keys() {
        if !catalog.dimensions.iter().any(|d| &d.name == name) {
            return Err(WeightError::UnknownDimension(name.clone()));
        }
    }
    let mut total = 0.0;
    for dim in &catalog.dimensions {
        let w = *dimension_weights
            .get(&dim.name)
            .ok_or_else(|| WeightError::MissingDimension(dim.name.clone()))?;
        if w < 0.0 {
            return Err(WeightError::NegativeWeight(dim.name.clone()));
        }
        total += w;
    }
    if total <= 0.0 {
        return Err(WeightError::ZeroTotal);
    }
    let mut entries = Vec::with_capacity(catalog.indicator_count());
    for dim in &catalog.dimensions {
        let dim_w = dimension_weights[&dim.name] / total;
        let w = dim_w / dim.indicators.len() as f64;
        for ind in &dim.indicators {
            entries.push((ind.id.clone(), w));
        }
    }
    Ok(WeightVector {
        scheme: WeightScheme::Custom,
        entries,
        dropped: Vec::new(),
    })
}

/// Weights from the dominant eigenvector of the indicator correlation
/// matrix. Zero-variance indicators are dropped before the correlation
/// is formed; the retained loadings are taken in absolute value and
/// normalized to sum one. The eigenvector sign is fixed so its entry sum
/// is non-negative (first nonzero entry positive on a tie), which makes
/// the result invariant to the solver's sign choice.
pub fn pca_weights(matrix: &DeprivationMatrix) -> Result<WeightVector, WeightError> {
    let n = matrix.n_children();
    if n < 2 {
        return Err(WeightError::TooFewChildren(n));
    }
    if matrix.has_missing() {
        return Err(WeightError::MissingCells);
    }
    let m = matrix.n_indicators();

    // columns as 0/1 with means, keeping only varying indicators
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped: Vec<String> = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for j in 0..m {
        let col: Vec<f64> = (0..n)
            .map(|i| {
                if matrix.cell(i, j) == Some(true) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        if var == 0.0 {
            dropped.push(matrix.indicator_ids[j].clone());
        } else {
            kept.push(j);
            cols.push(col);
        }
    }
    let p = kept.len();
    if p < 2 {
        return Err(WeightError::TooFewVaryingIndicators);
    }

    // Pearson correlation of the retained binary columns
    let means: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().sum::<f64>() / n as f64)
        .collect();
    let sds: Vec<f64> = cols
        .iter()
        .zip(&means)
        .map(|(c, &mu)| (c.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n as f64).sqrt())
        .collect();
    let mut corr = Mat::identity(p);
    for a in 0..p {
        for b in (a + 1)..p {
            let cov = cols[a]
                .iter()
                .zip(&cols[b])
                .map(|(x, y)| (x - means[a]) * (y - means[b]))
                .sum::<f64>()
                / n as f64;
            let r = cov / (sds[a] * sds[b]);
            corr[(a, b)] = r;
            corr[(b, a)] = r;
        }
    }

    let eig = linalg::jacobi_eigen(&corr, PCA_EIGEN_TOL, PCA_EIGEN_MAX_SWEEPS)?;
    let lead = linalg::dominant_index(&eig.values);
    let mut loading: Vec<f64> = (0..p).map(|i| eig.vectors[(i, lead)]).collect();

    // deterministic sign: entry sum non-negative, tie broken by making
    // the first nonzero entry positive
    let entry_sum: f64 = loading.iter().sum();
    let flip = if entry_sum < 0.0 {
        true
    } else if entry_sum > 0.0 {
        false
    } else {
        loading
            .iter()
            .find(|v| **v != 0.0)
            .is_some_and(|v| *v < 0.0)
    };
    if flip {
        for v in &mut loading {
            *v = -*v;
        }
    }

    let abs_sum: f64 = loading.iter().map(|v| v.abs()).sum();
    let entries: Vec<(String, f64)> = kept
        .iter()
        .zip(&loading)
        .map(|(&j, &l)| (matrix.indicator_ids[j].clone(), l.abs() / abs_sum))
        .collect();

    Ok(WeightVector {
        scheme: WeightScheme::PrincipalComponent,
        entries,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::reference_catalog;
    use crate::coding::MissingPolicy;

    #[test]
    fn equal_nested_reference_values() {
        let cat = reference_catalog();
        let w = equal_nested_weights(&cat);
        assert!((w.sum() - 1.0).abs() < 1e-12);
        // 14 dimensions; the 7-indicator health dimension splits 1/14 seven ways
        let health = w.get("stunting").unwrap();
        assert!((health - 1.0 / 98.0).abs() < 1e-15);
        let single = w.get("leisure").unwrap();
        assert!((single - 1.0 / 14.0).abs() < 1e-15);
    }

    #[test]
    fn custom_weights_normalize_and_validate() {
        let cat = reference_catalog();
        let mut dw = BTreeMap::new();
        for dim in &cat.dimensions {
            dw.insert(dim.name.clone(), 1.0);
        }
        // double weight on health
        dw.insert("life and physical health".to_string(), 2.0);
        let w = custom_weights(&cat, &dw).unwrap();
        assert!((w.sum() - 1.0).abs() < 1e-12);
        assert!((w.get("stunting").unwrap() - 2.0 / 15.0 / 7.0).abs() < 1e-15);

        dw.insert("no such dimension".to_string(), 1.0);
        assert!(matches!(
            custom_weights(&cat, &dw),
            Err(WeightError::UnknownDimension(_))
        ));
    }

    fn matrix_from(rows: &[&[u8]], ids: &[&str]) -> DeprivationMatrix {
        let cells = rows
            .iter()
            .flat_map(|r| r.iter().map(|&b| Some(b == 1)))
            .collect();
        DeprivationMatrix::new(
            ids.iter().map(|s| s.to_string()).collect(),
            (0..rows.len()).map(|i| format!("c{i}")).collect(),
            MissingPolicy::ExcludeChild,
            cells,
        )
    }

    #[test]
    fn pca_drops_constant_columns_and_normalizes() {
        let rows: Vec<&[u8]> = vec![
            &[1, 1, 0, 0],
            &[1, 1, 0, 0],
            &[0, 0, 1, 0],
            &[0, 1, 1, 0],
            &[1, 0, 0, 0],
        ];
        let m = matrix_from(&rows, &["a", "b", "c", "d"]);
        let w = pca_weights(&m).unwrap();
        assert_eq!(w.dropped, vec!["d".to_string()]);
        assert_eq!(w.entries.len(), 3);
        assert!((w.sum() - 1.0).abs() < 1e-12);
        assert!(w.entries.iter().all(|(_, v)| *v >= 0.0));
    }

    #[test]
    fn pca_identical_columns_share_weight() {
        // two perfectly correlated pairs: within-pair weights must match
        let rows: Vec<&[u8]> = vec![
            &[1, 1, 0, 0],
            &[1, 1, 1, 1],
            &[0, 0, 1, 1],
            &[0, 0, 0, 0],
            &[1, 1, 0, 0],
            &[0, 0, 1, 1],
        ];
        let m = matrix_from(&rows, &["a", "a2", "b", "b2"]);
        let w = pca_weights(&m).unwrap();
        let wa = w.get("a").unwrap();
        let wa2 = w.get("a2").unwrap();
        let wb = w.get("b").unwrap();
        let wb2 = w.get("b2").unwrap();
        assert!((wa - wa2).abs() < 1e-9);
        assert!((wb - wb2).abs() < 1e-9);
    }

    #[test]
    fn pca_rejects_missing_cells() {
        let mut m = matrix_from(&[&[1, 0], &[0, 1], &[1, 1]], &["a", "b"]);
        m.set_cell(0, 1, None);
        assert!(matches!(pca_weights(&m), Err(WeightError::MissingCells)));
    }

    #[test]
    fn pca_rejects_all_constant() {
        let m = matrix_from(&[&[1, 0], &[1, 0]], &["a", "b"]);
        assert!(matches!(
            pca_weights(&m),
            Err(WeightError::TooFewVaryingIndicators)
        ));
    }
}
