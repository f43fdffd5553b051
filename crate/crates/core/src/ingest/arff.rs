//! ARFF reader. Supports numeric and nominal attributes, case-insensitive
//! keywords and `%` comments; the string/date/relational attribute types and
//! the sparse data format are rejected with explicit errors.

use super::{
    parse_finite, strip_quotes, DataSchema, FeatureKind, IngestError, MissingPolicy, ParseOptions,
    RawTable, Value,
};

struct Attribute {
    name: String,
    kind: FeatureKind,
}

fn parse_attribute(rest: &str, line_no: usize) -> Result<Attribute, IngestError> {
    let rest = rest.trim();
    // Attribute names may be quoted and may contain spaces when quoted.
    let (name, type_part) = if rest.starts_with('\'') || rest.starts_with('"') {
        let quote = rest.chars().next().unwrap();
        match rest[1..].find(quote) {
            Some(end) => (rest[1..1 + end].to_string(), rest[end + 2..].trim()),
            None => (rest.to_string(), ""),
        }
    } else {
        match rest.find(char::is_whitespace) {
            Some(pos) => (rest[..pos].to_string(), rest[pos..].trim()),
            None => (rest.to_string(), ""),
        }
    };

    let kind = if type_part.starts_with('{') {
        let inner = type_part
            .trim_start_matches('{')
            .trim_end_matches('}')
            .trim_end();
        let inner = inner.strip_suffix('}').unwrap_or(inner);
        let levels: Vec<String> = inner
            .split(',')
            .map(|s| strip_quotes(s).to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if levels.is_empty() {
            return Err(IngestError::EmptyNominal(name));
        }
        FeatureKind::Nominal(levels)
    } else {
        match type_part.to_ascii_lowercase().as_str() {
            "numeric" | "real" | "integer" => FeatureKind::Numeric,
            other => {
                return Err(IngestError::UnsupportedAttribute {
                    line: line_no,
                    kind: other.to_string(),
                })
            }
        }
    };
    Ok(Attribute { name, kind })
}

fn split_csv_line(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

/// Parses ARFF text into a [`RawTable`]. The label column defaults to the
/// last declared attribute.
pub fn parse_arff(text: &str, options: &ParseOptions) -> Result<RawTable, IngestError> {
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut saw_relation = false;
    let mut data_start: Option<usize> = None;

    let lines: Vec<&str> = text.lines().collect();
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@relation") {
            saw_relation = true;
        } else if lower.starts_with("@attribute") {
            attributes.push(parse_attribute(&line["@attribute".len()..], i + 1)?);
        } else if lower.starts_with("@data") {
            data_start = Some(i + 1);
            break;
        }
    }

    if !saw_relation {
        return Err(IngestError::MissingSection("@relation"));
    }
    if attributes.is_empty() {
        return Err(IngestError::MissingSection("@attribute"));
    }
    let data_start = data_start.ok_or(IngestError::MissingSection("@data"))?;

    let label_name = match &options.label_column {
        Some(name) => name.clone(),
        None => attributes.last().unwrap().name.clone(),
    };
    let label_idx = attributes
        .iter()
        .position(|a| a.name == label_name)
        .ok_or_else(|| IngestError::MissingLabelColumn(label_name.clone()))?;

    let schema = DataSchema {
        feature_names: attributes
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, a)| a.name.clone())
            .collect(),
        feature_kinds: attributes
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, a)| a.kind.clone())
            .collect(),
        label_column: label_name,
        positive_label: options.positive_label.clone(),
    };
    schema.validate()?;

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0usize;
    'rows: for (i, raw) in lines.iter().enumerate().skip(data_start) {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if line.starts_with('{') {
            return Err(IngestError::UnsupportedAttribute {
                line: line_no,
                kind: "sparse data row".to_string(),
            });
        }
        let cells = split_csv_line(line);
        if cells.len() != attributes.len() {
            return Err(IngestError::ArityMismatch {
                line: line_no,
                expected: attributes.len(),
                got: cells.len(),
            });
        }
        let mut row = Vec::with_capacity(attributes.len() - 1);
        let mut label = String::new();
        for (col, (cell, attr)) in cells.iter().zip(&attributes).enumerate() {
            let token = strip_quotes(cell);
            if token == "?" {
                match options.missing {
                    MissingPolicy::Reject => return Err(IngestError::MissingValue { line: line_no }),
                    MissingPolicy::DropRow => {
                        dropped += 1;
                        continue 'rows;
                    }
                }
            }
            if col == label_idx {
                label = token.to_string();
                continue;
            }
            match &attr.kind {
                FeatureKind::Numeric => {
                    row.push(Value::Numeric(parse_finite(token, line_no, col + 1)?))
                }
                FeatureKind::Nominal(levels) => {
                    if !levels.iter().any(|l| l == token) {
                        return Err(IngestError::UnknownLevel {
                            line: line_no,
                            feature: attr.name.clone(),
                            value: token.to_string(),
                        });
                    }
                    row.push(Value::Nominal(token.to_string()));
                }
            }
        }
        rows.push(row);
        labels.push(label);
    }

    Ok(RawTable { schema, rows, labels, dropped_rows: dropped })
}
