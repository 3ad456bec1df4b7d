use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Text,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation; absent for fewer than two values.
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<ColumnStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableSummary {
    pub row_count: usize,
    pub column_count: usize,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct TableParseError {
    pub line: u64,
    pub message: String,
}

fn stats(values: &[f64]) -> Option<ColumnStats> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    });
    Some(ColumnStats {
        count: values.len(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean,
        std,
    })
}

/// Parses delimiter-separated text with a header row and describes it:
/// column names and inferred kinds, every row, and statistics for numeric
/// columns. The delimiter is `,` unless the header contains tabs or
/// semicolons and no commas.
pub fn summarize_table(text: &str) -> Result<TableSummary, TableParseError> {
    let header = text.lines().next().unwrap_or_default();
    let delimiter = if header.contains(',') {
        b','
    } else if header.contains('\t') {
        b'\t'
    } else if header.contains(';') {
        b';'
    } else {
        b','
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let to_err = |e: csv::Error| {
        let line = match e.kind() {
            csv::ErrorKind::UnequalLengths { pos: Some(p), .. } => p.line(),
            _ => e.position().map_or(0, |p| p.line()),
        };
        let message = match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                format!("expected {expected_len} fields, found {len}")
            }
            _ => e.to_string(),
        };
        TableParseError { line, message }
    };
    let names: Vec<String> = reader.headers().map_err(to_err)?.iter().map(str::to_string).collect();
    if names.iter().all(String::is_empty) {
        return Err(TableParseError {
            line: 1,
            message: "missing header row".into(),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(to_err)?;
        rows.push(record.iter().map(str::to_string).collect::<Vec<_>>());
    }
    let columns = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let cells: Vec<&str> = rows.iter().map(|r| r[i].as_str()).filter(|c| !c.is_empty()).collect();
            let numbers: Option<Vec<f64>> = cells
                .iter()
                .map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect();
            let (kind, stats) = match numbers {
                _ if cells.is_empty() => (ColumnKind::Empty, None),
                Some(v) => (ColumnKind::Numeric, stats(&v)),
                None => (ColumnKind::Text, None),
            };
            Column {
                name: name.clone(),
                kind,
                stats,
            }
        })
        .collect();
    Ok(TableSummary {
        row_count: rows.len(),
        column_count: names.len(),
        columns,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_column_means() {
        let t = summarize_table("T_K,P_Pa\n628,1e5\n728,1e5\n").unwrap();
        assert_eq!(t.row_count, 2);
        let s0 = t.columns[0].stats.as_ref().unwrap();
        let s1 = t.columns[1].stats.as_ref().unwrap();
        assert_eq!((s0.count, s0.mean, s1.mean), (2, 678.0, 1e5));
        // sample std of {628, 728} = 50 * sqrt(2)
        assert!((s0.std.unwrap() - 50.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(s1.std, Some(0.0));
    }

    #[test]
    fn header_only_has_no_statistics() {
        let t = summarize_table("a,b\n").unwrap();
        assert_eq!(t.row_count, 0);
        assert!(t.columns.iter().all(|c| c.stats.is_none() && c.kind == ColumnKind::Empty));
    }

    #[test]
    fn ragged_row_reports_its_line() {
        let e = summarize_table("a,b\n1,2\n3\n").unwrap_err();
        assert_eq!(e.line, 3);
    }

    #[test]
    fn text_columns_are_detected() {
        let t = summarize_table("name,value\npipe,1.5\ncore,2\n").unwrap();
        assert_eq!(t.columns[0].kind, ColumnKind::Text);
        assert_eq!(t.columns[1].kind, ColumnKind::Numeric);
    }
}
