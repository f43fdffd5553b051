//! Parsers for external dataset files (ARFF and delimited text) and the
//! conversion into the canonical [`Dataset`].
//!
//! Both parsers are pure functions over in-memory text. Labels keep their
//! raw string form until [`to_dataset`] maps the configured positive label
//! to 1 (attack) and everything else to 0.

mod arff;
mod delimited;

pub use arff::parse_arff;
pub use delimited::parse_delimited;

use thiserror::Error;

use crate::dataset::Dataset;
use crate::matrix::Matrix;

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("missing required section `{0}`")]
    MissingSection(&'static str),
    #[error("line {line}: expected {expected} values, found {got}")]
    ArityMismatch { line: usize, expected: usize, got: usize },
    #[error("line {line}, column {col}: `{token}` is not a finite number")]
    UnparseableNumeric { line: usize, col: usize, token: String },
    #[error("label column `{0}` not found")]
    MissingLabelColumn(String),
    #[error("label column has {0} distinct values; exactly two (or one) are supported")]
    NonBinaryLabel(usize),
    #[error("table has no data rows")]
    EmptyTable,
    #[error("line {line}: unsupported attribute type `{kind}` (only numeric and nominal are accepted)")]
    UnsupportedAttribute { line: usize, kind: String },
    #[error("line {line}: missing value ('?'); re-run with missing-value dropping enabled to skip such rows")]
    MissingValue { line: usize },
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
    #[error("line {line}: value `{value}` is not a declared level of nominal feature `{feature}`")]
    UnknownLevel { line: usize, feature: String, value: String },
    #[error("nominal feature `{0}` declares no levels")]
    EmptyNominal(String),
}

/// Per-feature value kind.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureKind {
    Numeric,
    /// Levels in declaration (or first-appearance) order.
    Nominal(Vec<String>),
}

/// Column metadata shared by both parsers.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSchema {
    pub feature_names: Vec<String>,
    pub feature_kinds: Vec<FeatureKind>,
    pub label_column: String,
    pub positive_label: String,
}

impl DataSchema {
    pub fn validate(&self) -> Result<(), IngestError> {
        assert_eq!(self.feature_names.len(), self.feature_kinds.len());
        for (i, name) in self.feature_names.iter().enumerate() {
            if self.feature_names[..i].contains(name) || *name == self.label_column {
                return Err(IngestError::DuplicateFeature(name.clone()));
            }
        }
        for (name, kind) in self.feature_names.iter().zip(&self.feature_kinds) {
            if let FeatureKind::Nominal(levels) = kind {
                if levels.is_empty() {
                    return Err(IngestError::EmptyNominal(name.clone()));
                }
            }
        }
        Ok(())
    }
}

/// One parsed feature cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Numeric(f64),
    Nominal(String),
}

/// Parsed rows plus schema; the label cell keeps its raw token.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub schema: DataSchema,
    pub rows: Vec<Vec<Value>>,
    pub labels: Vec<String>,
    /// Rows skipped because of missing values (only under `MissingPolicy::DropRow`).
    pub dropped_rows: usize,
}

/// What to do with `?` cells.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MissingPolicy {
    #[default]
    Reject,
    DropRow,
}

/// Parser configuration; the defaults match the simulator export convention.
#[derive(Clone, Debug)]
pub struct ParseOptions {
    /// Label column name; `None` selects the last column.
    pub label_column: Option<String>,
    pub positive_label: String,
    pub missing: MissingPolicy,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            label_column: None,
            positive_label: crate::dataset::ATTACK_LABEL.to_string(),
            missing: MissingPolicy::Reject,
        }
    }
}

pub(crate) fn parse_finite(token: &str, line: usize, col: usize) -> Result<f64, IngestError> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IngestError::UnparseableNumeric { line, col, token: token.to_string() }),
    }
}

pub(crate) fn strip_quotes(s: &str) -> &str {
    let s = s.trim();
    if s.len() >= 2
        && ((s.starts_with('\'') && s.ends_with('\'')) || (s.starts_with('"') && s.ends_with('"')))
    {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

/// One-hot encodes nominal features, maps the positive label to 1, and packs
/// everything into a `Dataset`. Expanded columns are named `feature=level`
/// in level-declaration order.
pub fn to_dataset(table: &RawTable) -> Result<Dataset, IngestError> {
    if table.rows.is_empty() {
        return Err(IngestError::EmptyTable);
    }
    table.schema.validate()?;

    let mut observed: Vec<&String> = Vec::new();
    for label in &table.labels {
        if !observed.contains(&label) {
            observed.push(label);
        }
    }
    if observed.len() > 2 {
        return Err(IngestError::NonBinaryLabel(observed.len()));
    }
    let positive = &table.schema.positive_label;
    if observed.len() == 2 && !observed.iter().any(|l| *l == positive) {
        // Two observed levels and neither is the positive marker: the label
        // mapping would silently mark everything normal.
        return Err(IngestError::NonBinaryLabel(2));
    }

    let mut names = Vec::new();
    for (name, kind) in table.schema.feature_names.iter().zip(&table.schema.feature_kinds) {
        match kind {
            FeatureKind::Numeric => names.push(name.clone()),
            FeatureKind::Nominal(levels) => {
                for level in levels {
                    names.push(format!("{}={}", name, level));
                }
            }
        }
    }

    let width = names.len();
    let mut data = Vec::with_capacity(table.rows.len() * width);
    for (r, row) in table.rows.iter().enumerate() {
        for ((value, kind), name) in
            row.iter().zip(&table.schema.feature_kinds).zip(&table.schema.feature_names)
        {
            match (value, kind) {
                (Value::Numeric(v), FeatureKind::Numeric) => data.push(*v),
                (Value::Nominal(v), FeatureKind::Nominal(levels)) => {
                    let hit = levels.iter().position(|l| l == v).ok_or_else(|| {
                        IngestError::UnknownLevel {
                            line: r + 1,
                            feature: name.clone(),
                            value: v.clone(),
                        }
                    })?;
                    for i in 0..levels.len() {
                        data.push(if i == hit { 1.0 } else { 0.0 });
                    }
                }
                // Parsers always align value variants with schema kinds.
                _ => unreachable!("value/kind mismatch escaped the parser"),
            }
        }
    }

    let labels: Vec<u8> = table.labels.iter().map(|l| u8::from(l == positive)).collect();
    let matrix = Matrix::from_vec(table.rows.len(), width, data);
    Ok(Dataset::new(matrix, labels, names).expect("parsers only admit finite values"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nominal_table() -> RawTable {
        let schema = DataSchema {
            feature_names: vec!["f".into()],
            feature_kinds: vec![FeatureKind::Nominal(vec!["a".into(), "b".into(), "c".into()])],
            label_column: "cls".into(),
            positive_label: "Attack".into(),
        };
        RawTable {
            schema,
            rows: vec![vec![Value::Nominal("b".into())], vec![Value::Nominal("a".into())]],
            labels: vec!["Attack".into(), "Normal".into()],
            dropped_rows: 0,
        }
    }

    #[test]
    fn one_hot_expansion() {
        let ds = to_dataset(&nominal_table()).unwrap();
        assert_eq!(ds.feature_names(), &["f=a".to_string(), "f=b".to_string(), "f=c".to_string()]);
        assert_eq!(ds.features().row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(ds.features().row(1), &[1.0, 0.0, 0.0]);
        assert_eq!(ds.labels(), &[1, 0]);
    }

    #[test]
    fn numeric_passthrough() {
        let schema = DataSchema {
            feature_names: vec!["x".into(), "y".into()],
            feature_kinds: vec![FeatureKind::Numeric, FeatureKind::Numeric],
            label_column: "cls".into(),
            positive_label: "1".into(),
        };
        let table = RawTable {
            schema,
            rows: vec![
                vec![Value::Numeric(1.5), Value::Numeric(-2.0)],
                vec![Value::Numeric(0.0), Value::Numeric(3.25)],
            ],
            labels: vec!["1".into(), "0".into()],
            dropped_rows: 0,
        };
        let ds = to_dataset(&table).unwrap();
        assert_eq!(ds.features().row(0), &[1.5, -2.0]);
        assert_eq!(ds.features().row(1), &[0.0, 3.25]);
    }

    #[test]
    fn three_label_levels_rejected() {
        let mut table = nominal_table();
        table.rows.push(vec![Value::Nominal("c".into())]);
        table.labels.push("Weird".into());
        assert_eq!(to_dataset(&table), Err(IngestError::NonBinaryLabel(3)));
    }

    #[test]
    fn empty_table_rejected() {
        let mut table = nominal_table();
        table.rows.clear();
        table.labels.clear();
        assert_eq!(to_dataset(&table), Err(IngestError::EmptyTable));
    }

    #[test]
    fn wrong_positive_label_with_two_levels_rejected() {
        let mut table = nominal_table();
        table.schema.positive_label = "Attak".into(); // typo must not silently zero the labels
        assert_eq!(to_dataset(&table), Err(IngestError::NonBinaryLabel(2)));
    }

    #[test]
    fn all_normal_export_is_accepted() {
        let mut table = nominal_table();
        table.labels = vec!["Normal".into(), "Normal".into()];
        let ds = to_dataset(&table).unwrap();
        assert_eq!(ds.labels(), &[0, 0]);
    }

    proptest! {
        // For each nominal feature exactly one expanded column is 1 per row.
        #[test]
        fn one_hot_exactly_one(levels in 1usize..6, picks in proptest::collection::vec(0usize..6, 1..20)) {
            let level_names: Vec<String> = (0..levels).map(|i| format!("l{}", i)).collect();
            let schema = DataSchema {
                feature_names: vec!["f".into()],
                feature_kinds: vec![FeatureKind::Nominal(level_names.clone())],
                label_column: "cls".into(),
                positive_label: "Attack".into(),
            };
            let rows: Vec<Vec<Value>> = picks
                .iter()
                .map(|&p| vec![Value::Nominal(level_names[p % levels].clone())])
                .collect();
            let labels = vec!["Normal".to_string(); rows.len()];
            let table = RawTable { schema, rows, labels, dropped_rows: 0 };
            let ds = to_dataset(&table).unwrap();
            for r in 0..ds.n_samples() {
                let ones = ds.features().row(r).iter().filter(|&&v| v == 1.0).count();
                let zeros = ds.features().row(r).iter().filter(|&&v| v == 0.0).count();
                prop_assert_eq!(ones, 1);
                prop_assert_eq!(zeros, levels - 1);
            }
        }
    }
}
