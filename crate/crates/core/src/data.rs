//! Tabular dataset ingestion and typing.
//!
//! Datasets are loaded from RFC 4180 CSV with a header row. Each column is
//! typed as numeric or categorical, either by inference
//! ([`infer_column_kind`]) or from a caller-supplied override map. Missing
//! cells (empty fields, plus unparseable cells in numeric columns) are
//! tracked per cell and excluded from all downstream statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stress;

/// Minimum fraction of non-missing cells that must parse as finite reals for
/// a column to be inferred numeric.
const NUMERIC_PARSE_RATE: f64 = 0.95;
/// Integer-coded columns with at most this many distinct values are treated
/// as categorical codes rather than measurements.
const LOW_CARDINALITY_INTEGER_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl ColumnKind {
    pub fn parse(s: &str) -> Result<ColumnKind> {
        match s {
            "numeric" => Ok(ColumnKind::Numeric),
            "categorical" => Ok(ColumnKind::Categorical),
            other => Err(Error::InvalidArgument(format!(
                "unknown column kind `{other}` (expected numeric or categorical)"
            ))),
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnKind::Numeric => f.write_str("numeric"),
            ColumnKind::Categorical => f.write_str("categorical"),
        }
    }
}

/// Typed cell storage for one column. `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    values: ColumnValues,
    missing_count: usize,
}

impl Column {
    /// Builds a numeric column. Non-finite values are demoted to missing so
    /// every stored numeric cell is a finite real.
    pub fn numeric(name: impl Into<String>, values: Vec<Option<f64>>) -> Column {
        let values: Vec<Option<f64>> = values
            .into_iter()
            .map(|v| v.filter(|x| x.is_finite()))
            .collect();
        let missing_count = values.iter().filter(|v| v.is_none()).count();
        Column {
            name: name.into(),
            values: ColumnValues::Numeric(values),
            missing_count,
        }
    }

    pub fn categorical(name: impl Into<String>, values: Vec<Option<String>>) -> Column {
        let missing_count = values.iter().filter(|v| v.is_none()).count();
        Column {
            name: name.into(),
            values: ColumnValues::Categorical(values),
            missing_count,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ColumnKind {
        match self.values {
            ColumnValues::Numeric(_) => ColumnKind::Numeric,
            ColumnValues::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match &self.values {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn missing_count(&self) -> usize {
        self.missing_count
    }

    pub fn values(&self) -> &ColumnValues {
        &self.values
    }

    /// Non-missing numeric cells, in row order. Empty for categorical columns.
    pub fn numeric_cells(&self) -> Vec<f64> {
        match &self.values {
            ColumnValues::Numeric(v) => v.iter().filter_map(|x| *x).collect(),
            ColumnValues::Categorical(_) => Vec::new(),
        }
    }

    /// Per-cell numeric view (missing preserved), or `None` for categorical.
    pub fn numeric_view(&self) -> Option<&[Option<f64>]> {
        match &self.values {
            ColumnValues::Numeric(v) => Some(v),
            ColumnValues::Categorical(_) => None,
        }
    }

    pub fn categorical_view(&self) -> Option<&[Option<String>]> {
        match &self.values {
            ColumnValues::Numeric(_) => None,
            ColumnValues::Categorical(v) => Some(v),
        }
    }

    /// Count of distinct non-missing values. Numeric cells compare by value
    /// (all stored cells are finite, with `-0.0` canonicalized to `0.0`).
    pub fn distinct_count(&self) -> usize {
        match &self.values {
            ColumnValues::Numeric(v) => v
                .iter()
                .filter_map(|x| *x)
                .map(|x| if x == 0.0 { 0.0f64.to_bits() } else { x.to_bits() })
                .collect::<BTreeSet<u64>>()
                .len(),
            ColumnValues::Categorical(v) => v
                .iter()
                .filter_map(|x| x.as_deref())
                .collect::<BTreeSet<&str>>()
                .len(),
        }
    }

    /// Frequency of each category among non-missing cells, sorted by name.
    /// Empty for numeric columns.
    pub fn category_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        if let ColumnValues::Categorical(v) = &self.values {
            for cell in v.iter().filter_map(|x| x.as_deref()) {
                *counts.entry(cell).or_insert(0) += 1;
            }
        }
        counts
    }
}

/// An immutable typed table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    columns: Vec<Column>,
    row_count: usize,
}

impl Dataset {
    /// Validates that at least one column and one row exist, that all columns
    /// have the same length, and that column names are unique.
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Dataset> {
        if columns.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let row_count = columns[0].len();
        if row_count == 0 {
            return Err(Error::ZeroDataRows);
        }
        let mut seen = BTreeSet::new();
        for column in &columns {
            if column.len() != row_count {
                return Err(Error::ColumnLengthMismatch {
                    column: column.name.clone(),
                    actual: column.len(),
                    expected: row_count,
                });
            }
            if !seen.insert(column.name.as_str().to_string()) {
                return Err(Error::DuplicateColumn(column.name.clone()));
            }
        }
        Ok(Dataset {
            name: name.into(),
            columns,
            row_count,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn missing_cells(&self) -> usize {
        self.columns.iter().map(|c| c.missing_count()).sum()
    }
}

/// Parses a cell as a finite real. Whitespace is trimmed; `NaN`/`inf`
/// spellings are rejected.
pub fn parse_numeric(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Infers a column's kind from its raw cells.
///
/// Numeric iff at least 95% of non-missing cells parse as finite reals AND
/// the column is not a low-cardinality integer code (more than 10 distinct
/// values, or any non-integer value present). Everything else is categorical.
pub fn infer_column_kind(cells: &[Option<String>]) -> Result<ColumnKind> {
    let non_missing: Vec<&str> = cells.iter().filter_map(|c| c.as_deref()).collect();
    if non_missing.is_empty() {
        return Err(Error::AllCellsMissing);
    }
    let parsed: Vec<f64> = non_missing.iter().filter_map(|c| parse_numeric(c)).collect();
    let parse_rate = parsed.len() as f64 / non_missing.len() as f64;
    if parse_rate < NUMERIC_PARSE_RATE {
        return Ok(ColumnKind::Categorical);
    }
    let distinct: BTreeSet<&str> = non_missing.iter().map(|c| c.trim()).collect();
    let any_non_integer = parsed.iter().any(|x| x.fract() != 0.0);
    if distinct.len() > LOW_CARDINALITY_INTEGER_LIMIT || any_non_integer {
        Ok(ColumnKind::Numeric)
    } else {
        Ok(ColumnKind::Categorical)
    }
}

/// Loads a CSV file (UTF-8, comma-separated, quoted fields, header row).
///
/// `type_overrides` forces the kind of named columns; in a numeric column,
/// non-missing cells that fail to parse become missing. Columns whose cells
/// are all missing default to categorical.
pub fn load_csv(path: &Path, type_overrides: &BTreeMap<String, ColumnKind>) -> Result<Dataset> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path.display().to_string(), io),
            other => Error::Csv {
                path: path.display().to_string(),
                message: format!("{other:?}"),
            },
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.display().to_string(),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut seen = BTreeSet::new();
    for header in &headers {
        if !seen.insert(header.clone()) {
            return Err(Error::DuplicateColumn(header.clone()));
        }
    }

    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); headers.len()];
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Csv {
                path: path.display().to_string(),
                message: format!(
                    "row has {} fields, header has {}",
                    record.len(),
                    headers.len()
                ),
            });
        }
        for (idx, field) in record.iter().enumerate() {
            let trimmed = field.trim();
            cells[idx].push(if trimmed.is_empty() {
                None
            } else {
                Some(trimmed.to_string())
            });
        }
    }
    if cells[0].is_empty() {
        return Err(Error::ZeroDataRows);
    }

    let mut columns = Vec::with_capacity(headers.len());
    for (header, raw) in headers.into_iter().zip(cells) {
        let kind = match type_overrides.get(&header) {
            Some(kind) => *kind,
            None => match infer_column_kind(&raw) {
                Ok(kind) => kind,
                Err(Error::AllCellsMissing) => ColumnKind::Categorical,
                Err(e) => return Err(e),
            },
        };
        let column = match kind {
            ColumnKind::Numeric => Column::numeric(
                header,
                raw.iter()
                    .map(|cell| cell.as_deref().and_then(parse_numeric))
                    .collect(),
            ),
            ColumnKind::Categorical => Column::categorical(header, raw),
        };
        columns.push(column);
    }
    Dataset::new(name, columns)
}

/// The 9 dataset meta-features used by the nearest-neighbor selector.
///
/// Field order is fixed (see [`MetaFeatureVector::FEATURE_NAMES`]) so that
/// Euclidean distances between vectors are well-defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaFeatureVector {
    pub row_count: f64,
    pub column_count: f64,
    pub numeric_column_count: f64,
    pub categorical_column_count: f64,
    pub max_abs_skewness: f64,
    pub max_cardinality: f64,
    pub max_zipf_ratio: f64,
    pub correlation_density: f64,
    pub overall_missing_rate: f64,
}

impl MetaFeatureVector {
    pub const FEATURE_NAMES: [&'static str; 9] = [
        "row_count",
        "column_count",
        "numeric_column_count",
        "categorical_column_count",
        "max_abs_skewness",
        "max_cardinality",
        "max_zipf_ratio",
        "correlation_density",
        "overall_missing_rate",
    ];

    pub fn to_array(self) -> [f64; 9] {
        [
            self.row_count,
            self.column_count,
            self.numeric_column_count,
            self.categorical_column_count,
            self.max_abs_skewness,
            self.max_cardinality,
            self.max_zipf_ratio,
            self.correlation_density,
            self.overall_missing_rate,
        ]
    }
}

/// Computes the meta-feature vector. The distributional entries reuse the
/// stress detectors, so the stress signature is embedded in the features.
pub fn meta_features(dataset: &Dataset) -> MetaFeatureVector {
    let numeric = dataset
        .columns()
        .iter()
        .filter(|c| c.kind() == ColumnKind::Numeric)
        .count();
    let total_cells = dataset.row_count() * dataset.column_count();
    MetaFeatureVector {
        row_count: dataset.row_count() as f64,
        column_count: dataset.column_count() as f64,
        numeric_column_count: numeric as f64,
        categorical_column_count: (dataset.column_count() - numeric) as f64,
        max_abs_skewness: stress::max_abs_skewness(dataset),
        max_cardinality: stress::max_cardinality(dataset) as f64,
        max_zipf_ratio: stress::zipf_concentration(dataset),
        correlation_density: stress::correlation_density(dataset),
        overall_missing_rate: dataset.missing_cells() as f64 / total_cells as f64,
    }
}
