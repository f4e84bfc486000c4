//! Reading CSV and SQLite sources into validated observation tables.

mod sample;
mod sqlite;

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::schema::{
    format_float, validate, Column, ObservationTable, Timestamp, DEVICE, TIME, USER, WINDOW_START,
};

pub use sample::{generate_sample, score_map_csv, SAMPLE_START_MS};
pub use sqlite::{read_sqlite, write_sqlite};

/// Numeric epoch values at or above this are milliseconds, below it seconds.
pub const EPOCH_MS_THRESHOLD: f64 = 1e11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Csv,
    Sqlite,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeFormat {
    #[default]
    Auto,
    EpochS,
    EpochMs,
    Iso8601,
}

/// Where a table comes from and how its columns map onto the standard names.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub path: PathBuf,
    #[serde(default)]
    pub table_name: Option<String>,
    /// Source column name → standard column name.
    #[serde(default)]
    pub column_map: BTreeMap<String, String>,
    #[serde(default)]
    pub time_format: TimeFormat,
}

impl SourceSpec {
    pub fn csv(path: impl Into<PathBuf>) -> Self {
        SourceSpec {
            kind: SourceKind::Csv,
            path: path.into(),
            table_name: None,
            column_map: BTreeMap::new(),
            time_format: TimeFormat::Auto,
        }
    }

    pub fn sqlite(path: impl Into<PathBuf>, table_name: impl Into<String>) -> Self {
        SourceSpec {
            kind: SourceKind::Sqlite,
            table_name: Some(table_name.into()),
            ..Self::csv(path)
        }
    }

    pub fn with_time_format(mut self, format: TimeFormat) -> Self {
        self.time_format = format;
        self
    }

    pub fn with_mapping(mut self, source: &str, standard: &str) -> Self {
        self.column_map.insert(source.into(), standard.into());
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.path.as_os_str().is_empty() {
            return Err(Error::Config("source path is empty".into()));
        }
        match (self.kind, &self.table_name) {
            (SourceKind::Sqlite, None) => Err(Error::Config(format!(
                "sqlite source {} needs a table_name",
                self.path.display()
            ))),
            (SourceKind::Csv, Some(_)) => Err(Error::Config(format!(
                "table_name is only valid for sqlite sources ({})",
                self.path.display()
            ))),
            _ => Ok(()),
        }
    }

    fn standard_name<'a>(&'a self, source: &'a str) -> &'a str {
        self.column_map.get(source).map_or(source, String::as_str)
    }
}

/// Reads whichever kind of source `spec` names.
pub fn read_source(spec: &SourceSpec) -> Result<ObservationTable> {
    match spec.kind {
        SourceKind::Csv => read_csv(spec),
        SourceKind::Sqlite => read_sqlite(spec),
    }
}

/// A raw time cell as found in a source.
pub(crate) enum RawTime<'a> {
    Int(i64),
    Real(f64),
    Text(&'a str),
}

pub(crate) fn parse_time(raw: RawTime<'_>, format: TimeFormat) -> Option<Timestamp> {
    let raw = match raw {
        RawTime::Text(s) => {
            let s = s.trim();
            if format == TimeFormat::Iso8601 {
                return Timestamp::parse_iso8601(s);
            }
            if let Ok(i) = s.parse::<i64>() {
                RawTime::Int(i)
            } else if let Some(x) = parse_number(s) {
                RawTime::Real(x)
            } else if format == TimeFormat::Auto {
                return Timestamp::parse_iso8601(s);
            } else {
                return None;
            }
        }
        other => other,
    };
    let format = match (format, &raw) {
        (TimeFormat::Auto, RawTime::Int(i)) if *i as f64 >= EPOCH_MS_THRESHOLD => TimeFormat::EpochMs,
        (TimeFormat::Auto, RawTime::Real(x)) if *x >= EPOCH_MS_THRESHOLD => TimeFormat::EpochMs,
        (TimeFormat::Auto, _) => TimeFormat::EpochS,
        (f, _) => f,
    };
    match (format, raw) {
        (TimeFormat::EpochMs, RawTime::Int(i)) => Timestamp::from_millis(i),
        (TimeFormat::EpochMs, RawTime::Real(x)) => Timestamp::from_secs_f64(x / 1000.0),
        (TimeFormat::EpochS, RawTime::Int(i)) => Timestamp::from_secs(i),
        (TimeFormat::EpochS, RawTime::Real(x)) => Timestamp::from_secs_f64(x),
        _ => None,
    }
}

/// Float parse restricted to strings that look like numbers (so "nan" or
/// "inf" stay text).
fn parse_number(s: &str) -> Option<f64> {
    if !s.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Narrowest column type that holds every non-empty cell.
fn infer_text_column(cells: Vec<Option<String>>) -> Column {
    let non_null = || cells.iter().flatten();
    if non_null().next().is_none() {
        return Column::Str(cells);
    }
    if non_null().all(|s| s.parse::<i64>().is_ok()) {
        return Column::Int(
            cells
                .iter()
                .map(|c| c.as_deref().and_then(|s| s.parse().ok()))
                .collect(),
        );
    }
    if non_null().all(|s| parse_number(s).is_some()) {
        return Column::Float(
            cells
                .iter()
                .map(|c| c.as_deref().and_then(parse_number))
                .collect(),
        );
    }
    Column::Str(cells)
}

/// Reads a comma-separated file with a mandatory header row.
pub fn read_csv(spec: &SourceSpec) -> Result<ObservationTable> {
    let file = std::fs::File::open(&spec.path).map_err(|e| Error::io(&spec.path, e))?;
    read_csv_from(std::io::BufReader::new(file), spec)
}

/// As [`read_csv`], from any reader; `spec.path` is used only in messages.
pub fn read_csv_from<R: Read>(reader: R, spec: &SourceSpec) -> Result<ObservationTable> {
    let csv_err = |source| Error::Csv {
        path: spec.path.clone(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| spec.standard_name(h.trim()).to_string())
        .collect();
    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); header.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        for (i, col) in cells.iter_mut().enumerate() {
            let v = rec.get(i).unwrap_or("");
            col.push((!v.is_empty()).then(|| v.to_string()));
        }
    }

    let mut table = ObservationTable::new();
    for (name, col) in header.into_iter().zip(cells) {
        let column = match name.as_str() {
            USER | DEVICE => Column::Str(col),
            TIME | WINDOW_START => {
                let format = if name == TIME {
                    spec.time_format
                } else {
                    TimeFormat::EpochMs
                };
                let times = col
                    .iter()
                    .enumerate()
                    .map(|(row, c)| match c {
                        None => Ok(None),
                        Some(s) => parse_time(RawTime::Text(s), format)
                            .map(Some)
                            .ok_or_else(|| Error::Parse {
                                row,
                                column: name.clone(),
                                message: format!("cannot read {s:?} as a {format:?} timestamp"),
                            }),
                    })
                    .collect::<Result<_>>()?;
                Column::Time(times)
            }
            _ => infer_text_column(col),
        };
        table.push_column(name, column)?;
    }
    validate(&table)
}

/// Writes `table` as CSV (comma separated, `\n` line ends, timestamps as
/// epoch milliseconds).
pub fn write_csv(table: &ObservationTable, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(table, std::io::BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_csv_to<W: Write>(table: &ObservationTable, writer: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(table.column_names())?;
    let cols: Vec<&Column> = table.columns().map(|(_, c)| c).collect();
    let mut rec: Vec<String> = Vec::with_capacity(cols.len());
    for row in 0..table.len() {
        rec.clear();
        rec.extend(cols.iter().map(|c| match c {
            Column::Str(v) => v[row].clone().unwrap_or_default(),
            Column::Int(v) => v[row].map(|x| x.to_string()).unwrap_or_default(),
            Column::Float(v) => v[row].map(format_float).unwrap_or_default(),
            Column::Time(v) => v[row].map(|t| t.millis().to_string()).unwrap_or_default(),
        }));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
