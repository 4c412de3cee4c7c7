//! Deprivation coding: applying catalog rules to child records to build
//! the binary deprivation matrix, under a configurable missing-data policy.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::IndicatorCatalog;
use crate::dataset::ChildDataset;

#[derive(Debug, Error)]
pub enum CodingError {
    #[error("every child has at least one missing indicator; nothing left to code under the exclusion policy")]
    AllChildrenExcluded,
    #[error("failed to write matrix: {0}")]
    Csv(#[from] csv::Error),
}

/// How missing indicator outcomes are handled downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Drop children with any missing indicator.
    #[default]
    ExcludeChild,
    /// Score missing indicators as not deprived.
    TreatNondeprived,
    /// Keep cells missing; weights are rescaled per child at scoring time.
    Renormalize,
}

impl MissingPolicy {
    pub fn label(self) -> &'static str {
        match self {
            MissingPolicy::ExcludeChild => "exclude_child",
            MissingPolicy::TreatNondeprived => "treat_nondeprived",
            MissingPolicy::Renormalize => "renormalize",
        }
    }
}

/// Children by indicators; `None` cells survive only under the
/// renormalizing policy.
#[derive(Debug, Clone)]
pub struct DeprivationMatrix {
    pub indicator_ids: Vec<String>,
    pub child_ids: Vec<String>,
    pub policy: MissingPolicy,
    cells: Vec<Option<bool>>,
}

impl DeprivationMatrix {
    pub fn new(
        indicator_ids: Vec<String>,
        child_ids: Vec<String>,
        policy: MissingPolicy,
        cells: Vec<Option<bool>>,
    ) -> Self {
        assert_eq!(cells.len(), indicator_ids.len() * child_ids.len());
        DeprivationMatrix {
            indicator_ids,
            child_ids,
            policy,
            cells,
        }
    }

    pub fn n_children(&self) -> usize {
        self.child_ids.len()
    }

    pub fn n_indicators(&self) -> usize {
        self.indicator_ids.len()
    }

    pub fn cell(&self, child: usize, indicator: usize) -> Option<bool> {
        self.cells[child * self.indicator_ids.len() + indicator]
    }

    pub fn row(&self, child: usize) -> &[Option<bool>] {
        let m = self.indicator_ids.len();
        &self.cells[child * m..(child + 1) * m]
    }

    pub fn set_cell(&mut self, child: usize, indicator: usize, value: Option<bool>) {
        let m = self.indicator_ids.len();
        self.cells[child * m + indicator] = value;
    }

    /// Indicator column as 0/1 with missing preserved.
    pub fn column(&self, indicator: usize) -> Vec<Option<bool>> {
        (0..self.n_children())
            .map(|i| self.cell(i, indicator))
            .collect()
    }

    pub fn has_missing(&self) -> bool {
        self.cells.iter().any(Option::is_none)
    }

    /// CSV with child_id first, then one 0/1 column per indicator;
    /// missing cells are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CodingError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["child_id".to_string()];
        header.extend(self.indicator_ids.iter().cloned());
        w.write_record(&header)?;
        for (i, child) in self.child_ids.iter().enumerate() {
            let mut row = vec![child.clone()];
            for cell in self.row(i) {
                row.push(match cell {
                    Some(true) => "1".to_string(),
                    Some(false) => "0".to_string(),
                    None => String::new(),
                });
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Evaluate every catalog rule for every child and apply the missing
/// policy. Children arrive in dataset order; under the exclusion policy
/// children with any missing outcome are dropped.
pub fn code_deprivations(
    dataset: &ChildDataset,
    catalog: &IndicatorCatalog,
    policy: MissingPolicy,
) -> Result<DeprivationMatrix, CodingError> {
    let indicator_ids = catalog.indicator_ids();
    let m = indicator_ids.len();
    let mut child_ids = Vec::new();
    let mut cells: Vec<Option<bool>> = Vec::new();

    for rec in &dataset.records {
        let lookup = |name: &str| rec.field(name);
        let mut row: Vec<Option<bool>> = Vec::with_capacity(m);
        for ind in catalog.indicators() {
            row.push(ind.rule.eval(&lookup));
        }
        match policy {
            MissingPolicy::ExcludeChild => {
                if row.iter().all(Option::is_some) {
                    child_ids.push(rec.child_id.clone());
                    cells.extend(row);
                }
            }
            MissingPolicy::TreatNondeprived => {
                child_ids.push(rec.child_id.clone());
                cells.extend(row.into_iter().map(|c| Some(c.unwrap_or(false))));
            }
            MissingPolicy::Renormalize => {
                child_ids.push(rec.child_id.clone());
                cells.extend(row);
            }
        }
    }

    if child_ids.is_empty() {
        return Err(CodingError::AllChildrenExcluded);
    }

    Ok(DeprivationMatrix::new(
        indicator_ids,
        child_ids,
        policy,
        cells,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::parse_catalog;
    use crate::dataset::ChildRecord;

    fn catalog() -> IndicatorCatalog {
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

    fn dataset() -> ChildDataset {
        let mut a = ChildRecord::new("a");
        a.set_num("haz", -3.0);
        a.set_num("paid_work", 0.0);
        let mut b = ChildRecord::new("b");
        b.set_num("haz", 1.0);
        // paid_work missing for b
        let mut c = ChildRecord::new("c");
        c.set_num("haz", -2.0);
        c.set_num("paid_work", 1.0);
        ChildDataset {
            records: vec![a, b, c],
        }
    }

    #[test]
    fn exclusion_drops_incomplete_children() {
        let m = code_deprivations(&dataset(), &catalog(), MissingPolicy::ExcludeChild).unwrap();
        assert_eq!(m.child_ids, vec!["a".to_string(), "c".to_string()]);
        assert_eq!(m.cell(0, 0), Some(true));
        assert_eq!(m.cell(0, 1), Some(false));
        // boundary is strict: haz == -2 is not stunted
        assert_eq!(m.cell(1, 0), Some(false));
        assert_eq!(m.cell(1, 1), Some(true));
    }

    #[test]
    fn treat_nondeprived_fills_zero() {
        let m = code_deprivations(&dataset(), &catalog(), MissingPolicy::TreatNondeprived).unwrap();
        assert_eq!(m.n_children(), 3);
        assert_eq!(m.cell(1, 1), Some(false));
    }

    #[test]
    fn renormalize_keeps_missing() {
        let m = code_deprivations(&dataset(), &catalog(), MissingPolicy::Renormalize).unwrap();
        assert_eq!(m.n_children(), 3);
        assert_eq!(m.cell(1, 1), None);
        assert!(m.has_missing());
    }

    #[test]
    fn all_excluded_is_an_error() {
        let mut rec = ChildRecord::new("only");
        rec.set_num("haz", -3.0);
        let ds = ChildDataset { records: vec![rec] };
        assert!(matches!(
            code_deprivations(&ds, &catalog(), MissingPolicy::ExcludeChild),
            Err(CodingError::AllChildrenExcluded)
        ));
    }

    #[test]
    fn matrix_csv_layout() {
        let m = code_deprivations(&dataset(), &catalog(), MissingPolicy::Renormalize).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("child_id,stunting,child_work"));
        assert_eq!(lines.next(), Some("a,1,0"));
        assert_eq!(lines.next(), Some("b,0,"));
        assert_eq!(lines.next(), Some("c,0,1"));
    }
}
