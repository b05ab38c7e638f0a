//! Tabular CSV ingestion, feature schemas, standardization and holdout carving.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Column name that is recognized as the period tag when inferring a schema.
pub const PERIOD_COLUMN: &str = "period";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {message}")]
    Csv { path: String, message: String },
    #[error("header does not match schema: expected [{expected}], found [{found}]")]
    HeaderMismatch { expected: String, found: String },
    #[error("line {line}: expected {expected} cells, found {found}")]
    RowWidth {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column '{column}': cannot parse '{value}' as a number")]
    UnparseableCell {
        line: usize,
        column: String,
        value: String,
    },
    #[error("line {line}: label value '{value}' is not 0 or 1")]
    BadLabel { line: usize, value: String },
    #[error("line {line}: period '{value}' is not a non-negative integer")]
    BadPeriod { line: usize, value: String },
    #[error("row {row}: period tag {period} decreases (previous {previous})")]
    PeriodRegression { row: usize, period: u64, previous: u64 },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("row {row} has {found} values, schema has {expected} columns")]
    RecordWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("standardization stats do not match the dataset schema: {0}")]
    StatsMismatch(String),
    #[error("holdout count {count} out of range for {rows} rows")]
    HoldoutRange { count: usize, rows: usize },
    #[error("write failed for {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Continuous,
    Discrete,
    Label,
    Timestamp,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Continuous => "continuous",
            Role::Discrete => "discrete",
            Role::Label => "label",
            Role::Timestamp => "timestamp",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "continuous" => Some(Role::Continuous),
            "discrete" => Some(Role::Discrete),
            "label" => Some(Role::Label),
            "timestamp" => Some(Role::Timestamp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub role: Role,
    /// Ordered category list, present only for discrete columns.
    pub categories: Option<Vec<String>>,
}

impl Column {
    pub fn continuous(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            role: Role::Continuous,
            categories: None,
        }
    }

    pub fn label(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            role: Role::Label,
            categories: None,
        }
    }

    pub fn timestamp(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            role: Role::Timestamp,
            categories: None,
        }
    }

    pub fn discrete<S: Into<String>>(name: impl Into<String>, categories: Vec<S>) -> Self {
        Column {
            name: name.into(),
            role: Role::Discrete,
            categories: Some(categories.into_iter().map(Into::into).collect()),
        }
    }
}

/// Ordered column roles for a tabular dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    columns: Vec<Column>,
}

impl FeatureSchema {
    pub fn new(columns: Vec<Column>) -> Result<Self, IngestError> {
        let labels = columns.iter().filter(|c| c.role == Role::Label).count();
        if labels != 1 {
            return Err(IngestError::InvalidSchema(format!(
                "expected exactly one label column, found {labels}"
            )));
        }
        let stamps = columns.iter().filter(|c| c.role == Role::Timestamp).count();
        if stamps > 1 {
            return Err(IngestError::InvalidSchema(format!(
                "at most one timestamp column allowed, found {stamps}"
            )));
        }
        let mut names = BTreeSet::new();
        for c in &columns {
            if !names.insert(c.name.as_str()) {
                return Err(IngestError::InvalidSchema(format!(
                    "duplicate column name '{}'",
                    c.name
                )));
            }
            match (c.role, &c.categories) {
                (Role::Discrete, Some(cats)) => {
                    if cats.is_empty() {
                        return Err(IngestError::InvalidSchema(format!(
                            "discrete column '{}' has no categories",
                            c.name
                        )));
                    }
                    let unique: BTreeSet<&String> = cats.iter().collect();
                    if unique.len() != cats.len() {
                        return Err(IngestError::InvalidSchema(format!(
                            "discrete column '{}' has duplicate categories",
                            c.name
                        )));
                    }
                }
                (Role::Discrete, None) => {
                    return Err(IngestError::InvalidSchema(format!(
                        "discrete column '{}' has no category list",
                        c.name
                    )))
                }
                (_, Some(_)) => {
                    return Err(IngestError::InvalidSchema(format!(
                        "non-discrete column '{}' carries categories",
                        c.name
                    )))
                }
                _ => {}
            }
        }
        Ok(FeatureSchema { columns })
    }

    /// Infers roles from a header and raw string cells.
    ///
    /// A column named `label` or `class` (any case) is the label, otherwise the
    /// last column. A column named `period` is the timestamp. Any other column
    /// with a non-numeric cell is discrete, categories sorted lexicographically.
    pub fn infer(header: &[String], cells: &[Vec<String>]) -> Result<Self, IngestError> {
        if header.is_empty() {
            return Err(IngestError::InvalidSchema("empty header".into()));
        }
        let label_idx = header
            .iter()
            .position(|h| {
                let h = h.to_ascii_lowercase();
                h == "label" || h == "class"
            })
            .unwrap_or(header.len() - 1);
        let mut columns = Vec::with_capacity(header.len());
        for (j, name) in header.iter().enumerate() {
            if j == label_idx {
                columns.push(Column::label(name.clone()));
            } else if name == PERIOD_COLUMN {
                columns.push(Column::timestamp(name.clone()));
            } else if cells.iter().all(|row| parse_number(&row[j]).is_some()) {
                columns.push(Column::continuous(name.clone()));
            } else {
                let cats: BTreeSet<&str> = cells.iter().map(|row| row[j].trim()).collect();
                columns.push(Column::discrete(name.clone(), cats.into_iter().collect()));
            }
        }
        FeatureSchema::new(columns)
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn label_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.role == Role::Label)
            .expect("validated schema has a label column")
    }

    pub fn timestamp_index(&self) -> Option<usize> {
        self.columns.iter().position(|c| c.role == Role::Timestamp)
    }

    pub fn indices_of(&self, role: Role) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == role)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn continuous_indices(&self) -> Vec<usize> {
        self.indices_of(Role::Continuous)
    }

    pub fn discrete_indices(&self) -> Vec<usize> {
        self.indices_of(Role::Discrete)
    }

    /// Total length of the concatenated one-hot blocks of all discrete columns.
    pub fn one_hot_len(&self) -> usize {
        self.columns
            .iter()
            .filter_map(|c| c.categories.as_ref().map(Vec::len))
            .sum()
    }
}

/// A single cell value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Cat(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Cat(s) => f.write_str(s),
        }
    }
}

pub type Record = Vec<Value>;

/// Immutable table of records with a period tag per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    rows: Vec<Record>,
    periods: Vec<u64>,
}

impl Dataset {
    pub fn new(
        schema: FeatureSchema,
        rows: Vec<Record>,
        periods: Vec<u64>,
    ) -> Result<Self, IngestError> {
        if rows.len() != periods.len() {
            return Err(IngestError::InvalidSchema(format!(
                "{} rows but {} period tags",
                rows.len(),
                periods.len()
            )));
        }
        let label = schema.label_index();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(IngestError::RecordWidth {
                    row: i,
                    expected: schema.len(),
                    found: row.len(),
                });
            }
            match row[label] {
                Value::Num(v) if v == 0.0 || v == 1.0 => {}
                ref other => {
                    return Err(IngestError::BadLabel {
                        line: i + 2,
                        value: other.to_string(),
                    })
                }
            }
            for (j, col) in schema.columns().iter().enumerate() {
                let ok = match col.role {
                    Role::Discrete => matches!(row[j], Value::Cat(_)),
                    _ => matches!(row[j], Value::Num(_)),
                };
                if !ok {
                    return Err(IngestError::InvalidSchema(format!(
                        "row {i}, column '{}' has the wrong value kind",
                        col.name
                    )));
                }
            }
        }
        for i in 1..periods.len() {
            if periods[i] < periods[i - 1] {
                return Err(IngestError::PeriodRegression {
                    row: i,
                    period: periods[i],
                    previous: periods[i - 1],
                });
            }
        }
        Ok(Dataset {
            schema,
            rows,
            periods,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn periods(&self) -> &[u64] {
        &self.periods
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn label(&self, row: usize) -> u8 {
        let v = self.rows[row][self.schema.label_index()]
            .as_num()
            .expect("label is numeric");
        v as u8
    }

    pub fn labels(&self) -> Vec<u8> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }

    /// Rows whose indices are listed, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            periods: indices.iter().map(|&i| self.periods[i]).collect(),
        }
    }

    /// Splits into consecutive groups sharing a period tag.
    pub fn period_groups(&self) -> Vec<(u64, Dataset)> {
        let mut out = Vec::new();
        let mut start = 0;
        while start < self.len() {
            let p = self.periods[start];
            let end = start + self.periods[start..].iter().take_while(|&&q| q == p).count();
            let idx: Vec<usize> = (start..end).collect();
            out.push((p, self.select(&idx)));
            start = end;
        }
        out
    }

    /// Splits into consecutive chunks of at most `size` rows.
    pub fn chunks(&self, size: usize) -> Vec<Dataset> {
        let size = size.max(1);
        (0..self.len())
            .step_by(size)
            .map(|s| {
                let idx: Vec<usize> = (s..(s + size).min(self.len())).collect();
                self.select(&idx)
            })
            .collect()
    }

    /// Writes the dataset as CSV with a header row. When the schema has a
    /// timestamp column, its cells carry the period tags.
    pub fn write_csv(&self, out: impl Write) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.schema.names())?;
        let stamp = self.schema.timestamp_index();
        for (row, &period) in self.rows.iter().zip(&self.periods) {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    if Some(j) == stamp {
                        period.to_string()
                    } else {
                        v.to_string()
                    }
                })
                .collect();
            w.write_record(&cells)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// How `load_csv` obtains a schema.
#[derive(Debug, Clone)]
pub enum SchemaSource {
    Auto,
    Explicit(FeatureSchema),
}

pub fn load_csv(path: impl AsRef<Path>, schema: SchemaSource) -> Result<Dataset, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Open {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, schema).map_err(|e| match e {
        IngestError::Csv { message, .. } => IngestError::Csv {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })
}

/// Parses CSV from any reader; `load_csv` is the file-path front end.
pub fn read_csv(input: impl std::io::Read, schema: SchemaSource) -> Result<Dataset, IngestError> {
    let csv_err = |e: csv::Error| IngestError::Csv {
        path: "<input>".into(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut cells = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != header.len() {
            return Err(IngestError::RowWidth {
                line: i + 2,
                expected: header.len(),
                found: rec.len(),
            });
        }
        cells.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
    }

    let schema = match schema {
        SchemaSource::Auto => FeatureSchema::infer(&header, &cells)?,
        SchemaSource::Explicit(s) => {
            if s.names() != header.iter().map(String::as_str).collect::<Vec<_>>() {
                return Err(IngestError::HeaderMismatch {
                    expected: s.names().join(","),
                    found: header.join(","),
                });
            }
            s
        }
    };

    let label = schema.label_index();
    let stamp = schema.timestamp_index();
    let mut rows = Vec::with_capacity(cells.len());
    let mut periods = Vec::with_capacity(cells.len());
    for (i, raw) in cells.iter().enumerate() {
        let line = i + 2;
        let mut record = Vec::with_capacity(raw.len());
        for (j, cell) in raw.iter().enumerate() {
            let col = &schema.columns()[j];
            let value = match col.role {
                Role::Discrete => Value::Cat(cell.trim().to_string()),
                _ => Value::Num(parse_number(cell).ok_or_else(|| {
                    IngestError::UnparseableCell {
                        line,
                        column: col.name.clone(),
                        value: cell.clone(),
                    }
                })?),
            };
            if j == label {
                let v = value.as_num().unwrap_or(f64::NAN);
                if v != 0.0 && v != 1.0 {
                    return Err(IngestError::BadLabel {
                        line,
                        value: cell.clone(),
                    });
                }
            }
            record.push(value);
        }
        let period = match stamp {
            Some(j) => {
                let v = record[j].as_num().unwrap_or(-1.0);
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(IngestError::BadPeriod {
                        line,
                        value: raw[j].clone(),
                    });
                }
                v as u64
            }
            None => 0,
        };
        rows.push(record);
        periods.push(period);
    }
    Dataset::new(schema, rows, periods)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    /// Index of the column in the schema.
    pub column: usize,
    pub mean: f64,
    pub std: f64,
    /// Set when the column was constant and `std` was forced to 1.
    pub constant: bool,
}

/// Per-continuous-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub columns: Vec<ColumnStats>,
}

impl StandardizationStats {
    fn check(&self, schema: &FeatureSchema) -> Result<(), IngestError> {
        let expected = schema.continuous_indices();
        let found: Vec<usize> = self.columns.iter().map(|c| c.column).collect();
        if expected != found {
            return Err(IngestError::StatsMismatch(format!(
                "continuous columns {expected:?}, stats cover {found:?}"
            )));
        }
        Ok(())
    }

    /// Standardized continuous values of one record, in schema order.
    pub fn standardized_values(&self, record: &Record) -> Result<Vec<f64>, IngestError> {
        self.columns
            .iter()
            .map(|c| {
                record
                    .get(c.column)
                    .and_then(Value::as_num)
                    .map(|v| (v - c.mean) / c.std)
                    .ok_or_else(|| {
                        IngestError::StatsMismatch(format!("column {} is not numeric", c.column))
                    })
            })
            .collect()
    }
}

pub fn fit_standardization(data: &Dataset) -> Result<StandardizationStats, IngestError> {
    if data.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    let n = data.len() as f64;
    let columns = data
        .schema()
        .continuous_indices()
        .into_iter()
        .map(|j| {
            let values = data.rows().iter().map(|r| r[j].as_num().unwrap_or(0.0));
            let mean = values.clone().sum::<f64>() / n;
            let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            let constant = !(std > 0.0) || !std.is_finite();
            ColumnStats {
                column: j,
                mean,
                std: if constant { 1.0 } else { std },
                constant,
            }
        })
        .collect();
    Ok(StandardizationStats { columns })
}

fn map_continuous(
    data: &Dataset,
    stats: &StandardizationStats,
    f: impl Fn(f64, &ColumnStats) -> f64,
) -> Result<Dataset, IngestError> {
    stats.check(data.schema())?;
    let rows = data
        .rows()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            for c in &stats.columns {
                if let Value::Num(v) = r[c.column] {
                    r[c.column] = Value::Num(f(v, c));
                }
            }
            r
        })
        .collect();
    Ok(Dataset {
        schema: data.schema.clone(),
        rows,
        periods: data.periods.clone(),
    })
}

pub fn standardize(data: &Dataset, stats: &StandardizationStats) -> Result<Dataset, IngestError> {
    map_continuous(data, stats, |v, c| (v - c.mean) / c.std)
}

/// Inverse of [`standardize`].
pub fn destandardize(data: &Dataset, stats: &StandardizationStats) -> Result<Dataset, IngestError> {
    map_continuous(data, stats, |v, c| v * c.std + c.mean)
}

/// Carves `holdout_count` rows out of `data`.
///
/// With a timestamp column the chronologically last rows are held out,
/// otherwise a seeded shuffle picks them. Both parts keep their original row
/// order, and holdout period tags are shifted to start after the last train
/// period.
pub fn split_holdout(
    data: &Dataset,
    holdout_count: usize,
    seed: u64,
) -> Result<(Dataset, Dataset), IngestError> {
    let n = data.len();
    if holdout_count == 0 || holdout_count >= n {
        return Err(IngestError::HoldoutRange {
            count: holdout_count,
            rows: n,
        });
    }
    let (mut train_idx, mut hold_idx): (Vec<usize>, Vec<usize>) =
        if data.schema().timestamp_index().is_some() {
            ((0..n - holdout_count).collect(), (n - holdout_count..n).collect())
        } else {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let hold = idx[..holdout_count].to_vec();
            let train = idx[holdout_count..].to_vec();
            (train, hold)
        };
    train_idx.sort_unstable();
    hold_idx.sort_unstable();

    let train = data.select(&train_idx);
    let mut holdout = data.select(&hold_idx);
    let max_train = train.periods.iter().copied().max().unwrap_or(0);
    let min_hold = holdout.periods.iter().copied().min().unwrap_or(0);
    let stamp = holdout.schema.timestamp_index();
    for (row, p) in holdout.rows.iter_mut().zip(holdout.periods.iter_mut()) {
        *p = *p - min_hold + max_train + 1;
        if let Some(j) = stamp {
            row[j] = Value::Num(*p as f64);
        }
    }
    Ok((train, holdout))
}

/// Writes `contents` to `path` through a temporary file in the same directory
/// and renames it into place, so a failure never leaves partial output.
pub fn write_atomic(
    path: impl AsRef<Path>,
    contents: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), IngestError> {
    let path = path.as_ref();
    let err = |source| IngestError::Write {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        contents(&mut buf).map_err(err)?;
        buf.flush().map_err(err)?;
    }
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}
