//! Delimited-text reader for SWaT-style CSV exports and the simulator's
//! dataset files. Lines starting with `#` are comments; the first
//! non-comment line is a header unless an explicit schema is supplied.

use super::{
    parse_finite, DataSchema, FeatureKind, IngestError, MissingPolicy, ParseOptions, RawTable,
    Value,
};

/// Parses delimited text into a [`RawTable`].
///
/// With `schema_hint = None` the header supplies column names, the label
/// column comes from `options` (defaulting to the last column), and feature
/// kinds are inferred: a column is numeric when every present cell parses as
/// a finite real, nominal otherwise (levels in first-appearance order).
///
/// With an explicit schema the file is headerless and columns follow schema
/// order with the label last.
pub fn parse_delimited(
    text: &str,
    delimiter: char,
    schema_hint: Option<&DataSchema>,
    options: &ParseOptions,
) -> Result<RawTable, IngestError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let header: Vec<String> = match schema_hint {
        Some(schema) => {
            let mut names = schema.feature_names.clone();
            names.push(schema.label_column.clone());
            names
        }
        None => {
            let (_, header_line) = lines.next().ok_or(IngestError::MissingSection("header"))?;
            header_line.split(delimiter).map(|s| s.trim().to_string()).collect()
        }
    };

    let label_name = match schema_hint {
        Some(schema) => schema.label_column.clone(),
        None => match &options.label_column {
            Some(name) => name.clone(),
            None => header.last().cloned().unwrap_or_default(),
        },
    };
    let label_idx = header
        .iter()
        .position(|h| *h == label_name)
        .ok_or_else(|| IngestError::MissingLabelColumn(label_name.clone()))?;

    // Collect raw cell grid first; kind inference needs a full pass.
    let mut grid: Vec<(usize, Vec<String>)> = Vec::new();
    let mut dropped = 0usize;
    'rows: for (line_no, line) in lines {
        let cells: Vec<String> = line.split(delimiter).map(|s| s.trim().to_string()).collect();
        if cells.len() != header.len() {
            return Err(IngestError::ArityMismatch {
                line: line_no,
                expected: header.len(),
                got: cells.len(),
            });
        }
        for cell in &cells {
            if cell == "?" {
                match options.missing {
                    MissingPolicy::Reject => {
                        return Err(IngestError::MissingValue { line: line_no })
                    }
                    MissingPolicy::DropRow => {
                        dropped += 1;
                        continue 'rows;
                    }
                }
            }
        }
        grid.push((line_no, cells));
    }

    let feature_cols: Vec<usize> = (0..header.len()).filter(|&i| i != label_idx).collect();

    let schema = match schema_hint {
        Some(schema) => {
            let mut s = schema.clone();
            s.positive_label = options.positive_label.clone();
            s
        }
        None => {
            let kinds: Vec<FeatureKind> = feature_cols
                .iter()
                .map(|&c| {
                    let numeric = grid
                        .iter()
                        .all(|(_, cells)| cells[c].parse::<f64>().map_or(false, f64::is_finite));
                    if numeric && !grid.is_empty() {
                        FeatureKind::Numeric
                    } else if grid.is_empty() {
                        FeatureKind::Numeric
                    } else {
                        let mut levels: Vec<String> = Vec::new();
                        for (_, cells) in &grid {
                            if !levels.contains(&cells[c]) {
                                levels.push(cells[c].clone());
                            }
                        }
                        FeatureKind::Nominal(levels)
                    }
                })
                .collect();
            DataSchema {
                feature_names: feature_cols.iter().map(|&c| header[c].clone()).collect(),
                feature_kinds: kinds,
                label_column: label_name,
                positive_label: options.positive_label.clone(),
            }
        }
    };
    schema.validate()?;

    let mut rows = Vec::with_capacity(grid.len());
    let mut labels = Vec::with_capacity(grid.len());
    for (line_no, cells) in &grid {
        let mut row = Vec::with_capacity(feature_cols.len());
        for (fi, (kind, &c)) in schema.feature_kinds.iter().zip(&feature_cols).enumerate() {
            let token = &cells[c];
            match kind {
                FeatureKind::Numeric => {
                    row.push(Value::Numeric(parse_finite(token, *line_no, c + 1)?))
                }
                FeatureKind::Nominal(levels) => {
                    if !levels.iter().any(|l| l == token) {
                        return Err(IngestError::UnknownLevel {
                            line: *line_no,
                            feature: schema.feature_names[fi].clone(),
                            value: token.clone(),
                        });
                    }
                    row.push(Value::Nominal(token.clone()));
                }
            }
        }
        rows.push(row);
        labels.push(cells[label_idx].clone());
    }

    Ok(RawTable { schema, rows, labels, dropped_rows: dropped })
}
