//! Indicator catalogs: named dimensions, each holding one or more
//! indicators with a source column list and a parsed cutoff rule.
//!
//! Catalogs load from a JSON document. An optional `parameters` section
//! supplies numeric values for `$name` references inside rules; callers
//! may override individual parameters at load time. The bundled reference
//! catalog covers fourteen dimensions with twenty-nine indicators.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use thiserror::Error;

use crate::expr::{self, ExprError, FieldKind, Rule};

pub const REFERENCE_CATALOG_JSON: &str = include_str!("../data/reference_catalog.json");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog JSON is malformed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("catalog has no dimensions")]
    Empty,
    #[error("duplicate dimension name `{0}`")]
    DuplicateDimension(String),
    #[error("duplicate indicator id `{0}`")]
    DuplicateIndicator(String),
    #[error("dimension `{0}` has no indicators")]
    EmptyDimension(String),
    #[error("indicator `{indicator}`: {source}")]
    Rule {
        indicator: String,
        source: ExprError,
    },
    #[error("indicator `{indicator}` rule reads `{field}` which is not in its source columns")]
    RuleFieldNotDeclared { indicator: String, field: String },
    #[error(
        "column `{column}` is used as {first} by `{first_indicator}` but as {second} by `{second_indicator}`"
    )]
    ColumnTypeConflict {
        column: String,
        first: &'static str,
        first_indicator: String,
        second: &'static str,
        second_indicator: String,
    },
}

#[derive(Debug, Clone)]
pub struct IndicatorDef {
    pub id: String,
    pub source_columns: Vec<String>,
    /// Original rule text, preserved for display and round-tripping.
    pub rule_text: String,
    pub rule: Rule,
    pub description: String,
}

#[derive(Debug, Clone)]
pub struct DimensionDef {
    pub name: String,
    pub indicators: Vec<IndicatorDef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone)]
pub struct IndicatorCatalog {
    pub name: String,
    pub dimensions: Vec<DimensionDef>,
    /// Parameter values in effect when the rules were parsed.
    pub parameters: BTreeMap<String, f64>,
    column_types: BTreeMap<String, ColumnType>,
}

impl IndicatorCatalog {
    pub fn dimension_count(&self) -> usize {
        self.dimensions.len()
    }

    pub fn indicator_count(&self) -> usize {
        self.dimensions.iter().map(|d| d.indicators.len()).sum()
    }

    /// Indicators in catalog order (dimension order, then declaration order).
    pub fn indicators(&self) -> impl Iterator<Item = &IndicatorDef> {
        self.dimensions.iter().flat_map(|d| d.indicators.iter())
    }

    pub fn indicator_ids(&self) -> Vec<String> {
        self.indicators().map(|i| i.id.clone()).collect()
    }

    /// Dimension index of each indicator, in catalog order.
    pub fn dimension_of_indicators(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.indicator_count());
        for (d, dim) in self.dimensions.iter().enumerate() {
            out.extend(std::iter::repeat(d).take(dim.indicators.len()));
        }
        out
    }

    /// All source columns in catalog order, deduplicated.
    pub fn source_columns(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for ind in self.indicators() {
            for col in &ind.source_columns {
                if seen.insert(col.clone()) {
                    out.push(col.clone());
                }
            }
        }
        out
    }

    /// Column type implied by the rules, if any rule constrains the column.
    pub fn column_type(&self, column: &str) -> Option<ColumnType> {
        self.column_types.get(column).copied()
    }
}

#[derive(Deserialize)]
struct RawCatalog {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
    dimensions: Vec<RawDimension>,
}

#[derive(Deserialize)]
struct RawDimension {
    name: String,
    indicators: Vec<RawIndicator>,
}

#[derive(Deserialize)]
struct RawIndicator {
    id: String,
    #[serde(default)]
    source_column: Option<String>,
    #[serde(default)]
    source_columns: Vec<String>,
    rule: String,
    #[serde(default)]
    description: String,
}

/// Parse a catalog from JSON with no parameter overrides.
pub fn parse_catalog(config_text: &str) -> Result<IndicatorCatalog, CatalogError> {
    parse_catalog_with_params(config_text, &BTreeMap::new())
}

/// Parse a catalog from JSON. Values in `overrides` take precedence over
/// the catalog's own `parameters` section.
pub fn parse_catalog_with_params(
    config_text: &str,
    overrides: &BTreeMap<String, f64>,
) -> Result<IndicatorCatalog, CatalogError> {
    let raw: RawCatalog = serde_json::from_str(config_text)?;
    if raw.dimensions.is_empty() {
        return Err(CatalogError::Empty);
    }

    let mut parameters = raw.parameters;
    for (k, v) in overrides {
        parameters.insert(k.clone(), *v);
    }

    let mut dim_names = BTreeSet::new();
    let mut indicator_ids = BTreeSet::new();
    let mut dimensions = Vec::with_capacity(raw.dimensions.len());
    let mut column_types: BTreeMap<String, (ColumnType, String)> = BTreeMap::new();

    for raw_dim in raw.dimensions {
        if !dim_names.insert(raw_dim.name.clone()) {
            return Err(CatalogError::DuplicateDimension(raw_dim.name));
        }
        if raw_dim.indicators.is_empty() {
            return Err(CatalogError::EmptyDimension(raw_dim.name));
        }
        let mut indicators = Vec::with_capacity(raw_dim.indicators.len());
        for raw_ind in raw_dim.indicators {
            if !indicator_ids.insert(raw_ind.id.clone()) {
                return Err(CatalogError::DuplicateIndicator(raw_ind.id));
            }
            let mut source_columns = raw_ind.source_columns;
            if let Some(single) = raw_ind.source_column {
                source_columns.insert(0, single);
            }
            let rule = expr::parse_rule(&raw_ind.rule, &parameters).map_err(|source| {
                CatalogError::Rule {
                    indicator: raw_ind.id.clone(),
                    source,
                }
            })?;
            // a rule may only read columns its indicator declares
            let declared: BTreeSet<&str> = source_columns.iter().map(String::as_str).collect();
            for field in rule.fields() {
                if !declared.contains(field.as_str()) {
                    return Err(CatalogError::RuleFieldNotDeclared {
                        indicator: raw_ind.id,
                        field,
                    });
                }
            }
            for (column, kind) in rule.field_kinds() {
                let ty = match kind {
                    FieldKind::Numeric => ColumnType::Numeric,
                    FieldKind::Categorical => ColumnType::Categorical,
                };
                match column_types.get(&column) {
                    None => {
                        column_types.insert(column, (ty, raw_ind.id.clone()));
                    }
                    Some((existing, first_indicator)) if *existing != ty => {
                        return Err(CatalogError::ColumnTypeConflict {
                            column,
                            first: type_name(*existing),
                            first_indicator: first_indicator.clone(),
                            second: type_name(ty),
                            second_indicator: raw_ind.id,
                        });
                    }
                    Some(_) => {}
                }
            }
            indicators.push(IndicatorDef {
                id: raw_ind.id,
                source_columns,
                rule_text: raw_ind.rule,
                rule,
                description: raw_ind.description,
            });
        }
        dimensions.push(DimensionDef {
            name: raw_dim.name,
            indicators,
        });
    }

    Ok(IndicatorCatalog {
        name: raw.name.unwrap_or_else(|| "catalog".to_string()),
        dimensions,
        parameters,
        column_types: column_types
            .into_iter()
            .map(|(k, (ty, _))| (k, ty))
            .collect(),
    })
}

fn type_name(ty: ColumnType) -> &'static str {
    match ty {
        ColumnType::Numeric => "numeric",
        ColumnType::Categorical => "categorical",
    }
}

/// The bundled reference catalog.
pub fn reference_catalog() -> IndicatorCatalog {
    parse_catalog(REFERENCE_CATALOG_JSON).expect("bundled reference catalog must parse")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_catalog_shape() {
        let cat = reference_catalog();
        assert_eq!(cat.dimension_count(), 14);
        assert_eq!(cat.indicator_count(), 29);
        // the seven health indicators sit in the first dimension
        assert_eq!(cat.dimensions[0].indicators.len(), 7);
        // ids are unique by construction; spot-check a few
        let ids = cat.indicator_ids();
        assert!(ids.contains(&"stunting".to_string()));
        assert!(ids.contains(&"school_travel_time".to_string()));
        assert_eq!(ids.len(), 29);
    }

    #[test]
    fn reference_catalog_columns_are_numeric() {
        let cat = reference_catalog();
        for col in cat.source_columns() {
            assert_eq!(cat.column_type(&col), Some(ColumnType::Numeric), "{col}");
        }
    }

    #[test]
    fn parameter_override_changes_rule() {
        let mut overrides = BTreeMap::new();
        overrides.insert("domestic_hours_threshold".to_string(), 4.0);
        let cat = parse_catalog_with_params(REFERENCE_CATALOG_JSON, &overrides).unwrap();
        let ind = cat.indicators().find(|i| i.id == "domestic_tasks").unwrap();
        use crate::expr::{CmpOp, Literal, Rule};
        assert_eq!(
            ind.rule,
            Rule::Cmp {
                field: "domestic_hours".into(),
                op: CmpOp::Gt,
                literal: Literal::Num(4.0),
            }
        );
    }

    #[test]
    fn rejects_rule_reading_undeclared_column() {
        let text = r#"{
            "dimensions": [{
                "name": "d",
                "indicators": [{
                    "id": "i",
                    "source_columns": ["a"],
                    "rule": "b > 1"
                }]
            }]
        }"#;
        let err = parse_catalog(text).unwrap_err();
        assert!(matches!(
            err,
            CatalogError::RuleFieldNotDeclared { ref field, .. } if field == "b"
        ));
    }

    #[test]
    fn rejects_duplicate_indicator_ids() {
        let text = r#"{
            "dimensions": [{
                "name": "d",
                "indicators": [
                    {"id": "i", "source_columns": ["a"], "rule": "a > 1"},
                    {"id": "i", "source_columns": ["b"], "rule": "b > 1"}
                ]
            }]
        }"#;
        assert!(matches!(
            parse_catalog(text).unwrap_err(),
            CatalogError::DuplicateIndicator(_)
        ));
    }

    #[test]
    fn rejects_empty_dimension() {
        let text = r#"{"dimensions": [{"name": "d", "indicators": []}]}"#;
        assert!(matches!(
            parse_catalog(text).unwrap_err(),
            CatalogError::EmptyDimension(_)
        ));
    }

    #[test]
    fn rejects_column_type_conflict() {
        let text = r#"{
            "dimensions": [{
                "name": "d",
                "indicators": [
                    {"id": "i1", "source_columns": ["a"], "rule": "a > 1"},
                    {"id": "i2", "source_columns": ["a"], "rule": "a == urban"}
                ]
            }]
        }"#;
        assert!(matches!(
            parse_catalog(text).unwrap_err(),
            CatalogError::ColumnTypeConflict { .. }
        ));
    }

    #[test]
    fn single_source_column_alias() {
        let text = r#"{
            "dimensions": [{
                "name": "d",
                "indicators": [{"id": "i", "source_column": "a", "rule": "a > 1"}]
            }]
        }"#;
        let cat = parse_catalog(text).unwrap();
        let ind = cat.indicators().next().unwrap();
        assert_eq!(ind.source_columns, vec!["a".to_string()]);
    }

    #[test]
    fn syntax_error_carries_indicator_context() {
        let text = r#"{
            "dimensions": [{
                "name": "d",
                "indicators": [{"id": "broken", "source_columns": ["haz"], "rule": "haz <"}]
            }]
        }"#;
        let err = parse_catalog(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("broken"));
        assert!(msg.contains("token 3"));
    }
}
