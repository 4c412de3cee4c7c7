//! Child-level records and CSV ingestion.
//!
//! Every dataset carries four fixed columns (`child_id`, `sex`, `area`,
//! `country`) plus the indicator source columns named by the active
//! catalog. Empty cells are missing without comment; a non-empty cell
//! that fails to parse in a numeric column also becomes missing but is
//! counted in the ingest warning tally.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{ColumnType, IndicatorCatalog};
pub use crate::expr::Value;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read input: {0}")]
    Csv(#[from] csv::Error),
    #[error("required column `{0}` is missing from the header")]
    MissingColumn(String),
    #[error("duplicate child id `{0}`")]
    DuplicateChildId(String),
    #[error("row {row}: child_id is empty")]
    EmptyChildId { row: usize },
    #[error("row {row}: `{value}` is not a valid sex (expected male or female)")]
    InvalidSex { row: usize, value: String },
    #[error("row {row}: `{value}` is not a valid area (expected urban or rural)")]
    InvalidArea { row: usize, value: String },
    #[error("dataset has no rows")]
    NoRows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub fn label(self) -> &'static str {
        match self {
            Sex::Male => "male",
            Sex::Female => "female",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Area {
    Urban,
    Rural,
}

impl Area {
    pub fn label(self) -> &'static str {
        match self {
            Area::Urban => "urban",
            Area::Rural => "rural",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChildRecord {
    pub child_id: String,
    pub sex: Option<Sex>,
    pub area: Option<Area>,
    pub country: String,
    fields: BTreeMap<String, Value>,
}

impl ChildRecord {
    pub fn new(child_id: impl Into<String>) -> Self {
        ChildRecord {
            child_id: child_id.into(),
            sex: None,
            area: None,
            country: String::new(),
            fields: BTreeMap::new(),
        }
    }

    pub fn set_field(&mut self, name: impl Into<String>, value: Value) {
        self.fields.insert(name.into(), value);
    }

    pub fn set_num(&mut self, name: impl Into<String>, value: f64) {
        self.set_field(name, Value::Num(value));
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        self.fields.get(name)
    }

    pub fn num_field(&self, name: &str) -> Option<f64> {
        match self.fields.get(name) {
            Some(Value::Num(v)) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ChildDataset {
    pub records: Vec<ChildRecord>,
}

impl ChildDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn child_ids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.child_id.clone()).collect()
    }

    pub fn find(&self, child_id: &str) -> Option<&ChildRecord> {
        self.records.iter().find(|r| r.child_id == child_id)
    }

    /// Write the dataset as CSV with the fixed columns first, then
    /// `columns` in the given order. Missing cells are empty.
    pub fn write_csv<W: std::io::Write>(
        &self,
        columns: &[String],
        out: W,
    ) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "child_id".to_string(),
            "sex".to_string(),
            "area".to_string(),
            "country".to_string(),
        ];
        header.extend(columns.iter().cloned());
        w.write_record(&header)?;
        for rec in &self.records {
            let mut row = vec![
                rec.child_id.clone(),
                rec.sex.map_or(String::new(), |s| s.label().to_string()),
                rec.area.map_or(String::new(), |a| a.label().to_string()),
                rec.country.clone(),
            ];
            for col in columns {
                row.push(match rec.field(col) {
                    Some(Value::Num(v)) => format_num(*v),
                    Some(Value::Cat(s)) => s.clone(),
                    None => String::new(),
                });
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal form.
fn format_num(v: f64) -> String {
    let mut s = format!("{v}");
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

#[derive(Debug)]
pub struct Ingest {
    pub dataset: ChildDataset,
    /// Count of non-empty cells in numeric columns that failed to parse
    /// (or parsed to a non-finite value) and were treated as missing.
    pub numeric_warnings: usize,
}

/// Read child records from CSV. Lines starting with `#` are comments, so
/// the tool's own outputs round-trip. The header must contain the four
/// fixed columns and every source column the catalog references. Column
/// types follow the catalog's rules; columns the catalog does not
/// constrain are parsed as numeric when possible and kept as categorical
/// text otherwise.
pub fn ingest_records<R: Read>(
    reader: R,
    catalog: &IndicatorCatalog,
) -> Result<Ingest, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let position = |name: &str| headers.iter().position(|h| h == name);

    let id_col =
        position("child_id").ok_or_else(|| DatasetError::MissingColumn("child_id".into()))?;
    let sex_col = position("sex").ok_or_else(|| DatasetError::MissingColumn("sex".into()))?;
    let area_col = position("area").ok_or_else(|| DatasetError::MissingColumn("area".into()))?;
    let country_col =
        position("country").ok_or_else(|| DatasetError::MissingColumn("country".into()))?;

    let mut field_cols: Vec<(String, usize, Option<ColumnType>)> = Vec::new();
    for col in catalog.source_columns() {
        let idx = position(&col).ok_or_else(|| DatasetError::MissingColumn(col.clone()))?;
        field_cols.push((col.clone(), idx, catalog.column_type(&col)));
    }

    let mut seen_ids = BTreeMap::new();
    let mut records = Vec::new();
    let mut numeric_warnings = 0usize;

    for (row_idx, row) in rdr.records().enumerate() {
        let row = row?;
        // parser position counts comment and header lines
        let line = row
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(row_idx + 2);
        let child_id = row.get(id_col).unwrap_or("").to_string();
        if child_id.is_empty() {
            return Err(DatasetError::EmptyChildId { row: line });
        }
        if seen_ids.insert(child_id.clone(), line).is_some() {
            return Err(DatasetError::DuplicateChildId(child_id));
        }

        let sex = match row.get(sex_col).unwrap_or("") {
            "" => None,
            s if s.eq_ignore_ascii_case("male") || s.eq_ignore_ascii_case("m") => Some(Sex::Male),
            s if s.eq_ignore_ascii_case("female") || s.eq_ignore_ascii_case("f") => {
                Some(Sex::Female)
            }
            other => {
                return Err(DatasetError::InvalidSex {
                    row: line,
                    value: other.to_string(),
                })
            }
        };
        let area = match row.get(area_col).unwrap_or("") {
            "" => None,
            s if s.eq_ignore_ascii_case("urban") => Some(Area::Urban),
            s if s.eq_ignore_ascii_case("rural") => Some(Area::Rural),
            other => {
                return Err(DatasetError::InvalidArea {
                    row: line,
                    value: other.to_string(),
                })
            }
        };

        let mut rec = ChildRecord::new(child_id);
        rec.sex = sex;
        rec.area = area;
        rec.country = row.get(country_col).unwrap_or("").to_string();

        for (name, idx, ty) in &field_cols {
            let raw = row.get(*idx).unwrap_or("");
            if raw.is_empty() {
                continue;
            }
            match ty {
                Some(ColumnType::Numeric) | None => match raw.parse::<f64>() {
                    Ok(v) if v.is_finite() => rec.set_num(name.clone(), v),
                    _ => {
                        if matches!(ty, Some(ColumnType::Numeric)) {
                            numeric_warnings += 1;
                        } else {
                            rec.set_field(name.clone(), Value::Cat(raw.to_string()));
                        }
                    }
                },
                Some(ColumnType::Categorical) => {
                    rec.set_field(name.clone(), Value::Cat(raw.to_string()));
                }
            }
        }
        records.push(rec);
    }

    if records.is_empty() {
        return Err(DatasetError::NoRows);
    }

    Ok(Ingest {
        dataset: ChildDataset { records },
        numeric_warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::parse_catalog;

    fn tiny_catalog() -> IndicatorCatalog {
        parse_catalog(
            r#"{
                "dimensions": [
                    {"name": "health", "indicators": [
                        {"id": "stunting", "source_columns": ["haz"], "rule": "haz < -2"}
                    ]},
                    {"name": "work", "indicators": [
                        {"id": "child_work", "source_columns": ["paid_work"], "rule": "paid_work == 1"}
                    ]}
                ]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn ingests_and_types_columns() {
        let csv_text = "\
child_id,sex,area,country,haz,paid_work
c1,female,rural,peru,-2.5,1
c2,male,urban,peru,0.3,0
";
        let ingest = ingest_records(csv_text.as_bytes(), &tiny_catalog()).unwrap();
        assert_eq!(ingest.numeric_warnings, 0);
        let ds = ingest.dataset;
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.records[0].num_field("haz"), Some(-2.5));
        assert_eq!(ds.records[1].sex, Some(Sex::Male));
        assert_eq!(ds.records[1].area, Some(Area::Urban));
    }

    #[test]
    fn empty_cell_missing_without_warning_garbage_with_warning() {
        let csv_text = "\
child_id,sex,area,country,haz,paid_work
c1,female,rural,peru,,1
c2,male,urban,peru,n/a,0
";
        let ingest = ingest_records(csv_text.as_bytes(), &tiny_catalog()).unwrap();
        assert_eq!(ingest.numeric_warnings, 1);
        assert_eq!(ingest.dataset.records[0].field("haz"), None);
        assert_eq!(ingest.dataset.records[1].field("haz"), None);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let csv_text = "\
child_id,sex,area,country,haz,paid_work
c1,female,rural,peru,-1,0
c1,male,urban,peru,0,0
";
        assert!(matches!(
            ingest_records(csv_text.as_bytes(), &tiny_catalog()).unwrap_err(),
            DatasetError::DuplicateChildId(id) if id == "c1"
        ));
    }

    #[test]
    fn missing_required_column_rejected() {
        let csv_text = "child_id,sex,area,country,haz\nc1,female,rural,peru,-1\n";
        assert!(matches!(
            ingest_records(csv_text.as_bytes(), &tiny_catalog()).unwrap_err(),
            DatasetError::MissingColumn(col) if col == "paid_work"
        ));
    }

    #[test]
    fn non_finite_numeric_is_missing_with_warning() {
        let csv_text = "\
child_id,sex,area,country,haz,paid_work
c1,female,rural,peru,inf,1
";
        let ingest = ingest_records(csv_text.as_bytes(), &tiny_catalog()).unwrap();
        assert_eq!(ingest.numeric_warnings, 1);
        assert_eq!(ingest.dataset.records[0].field("haz"), None);
    }

    #[test]
    fn csv_round_trip() {
        let csv_text = "\
child_id,sex,area,country,haz,paid_work
c1,female,rural,peru,-2.5,1
c2,male,urban,peru,,0
";
        let cat = tiny_catalog();
        let ingest = ingest_records(csv_text.as_bytes(), &cat).unwrap();
        let mut buf = Vec::new();
        ingest
            .dataset
            .write_csv(&cat.source_columns(), &mut buf)
            .unwrap();
        let again = ingest_records(buf.as_slice(), &cat).unwrap();
        assert_eq!(again.dataset.len(), 2);
        assert_eq!(again.dataset.records[0].num_field("haz"), Some(-2.5));
        assert_eq!(again.dataset.records[1].field("haz"), None);
    }
}
