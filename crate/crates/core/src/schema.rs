//! The standard observation table: one row per timestamped observation,
//! one column per observation property.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const USER: &str = "user";
pub const TIME: &str = "time";
pub const DEVICE: &str = "device";
pub const WINDOW_START: &str = "window_start";

const MS_PER_DAY: i64 = 86_400_000;

/// UTC epoch milliseconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const EPOCH: Timestamp = Timestamp(0);

    /// Returns `None` for instants before the epoch.
    pub fn from_millis(ms: i64) -> Option<Self> {
        (ms >= 0).then_some(Timestamp(ms))
    }

    /// Window arithmetic can land before the epoch when a positive offset is
    /// applied to first-day-of-1970 data; everything else goes through
    /// [`Timestamp::from_millis`].
    pub(crate) const fn from_millis_unchecked(ms: i64) -> Self {
        Timestamp(ms)
    }

    pub fn from_secs(s: i64) -> Option<Self> {
        s.checked_mul(1000).and_then(Self::from_millis)
    }

    /// Fractional seconds, rounded to the nearest millisecond.
    pub fn from_secs_f64(s: f64) -> Option<Self> {
        if !s.is_finite() {
            return None;
        }
        let ms = (s * 1000.0).round();
        if ms > i64::MAX as f64 {
            return None;
        }
        Self::from_millis(ms as i64)
    }

    /// RFC 3339 / ISO-8601. A missing offset is read as UTC.
    pub fn parse_iso8601(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
            return Self::from_millis(dt.timestamp_millis());
        }
        for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
            if let Ok(naive) = NaiveDateTime::parse_from_str(text, fmt) {
                return Self::from_millis(naive.and_utc().timestamp_millis());
            }
        }
        if let Ok(date) = chrono::NaiveDate::parse_from_str(text, "%Y-%m-%d") {
            return Self::from_millis(date.and_hms_opt(0, 0, 0)?.and_utc().timestamp_millis());
        }
        None
    }

    pub const fn millis(self) -> i64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn plus_millis(self, ms: i64) -> Self {
        Timestamp(self.0 + ms)
    }

    /// Hour of day (0..24) at the given fixed offset from UTC.
    pub fn local_hour(self, offset_min: i32) -> u32 {
        let local = self.0 + i64::from(offset_min) * 60_000;
        (local.rem_euclid(MS_PER_DAY) / 3_600_000) as u32
    }

    /// Start of the local calendar day containing this instant, in UTC ms.
    pub fn local_midnight(self, offset_min: i32) -> Timestamp {
        let off = i64::from(offset_min) * 60_000;
        Timestamp((self.0 + off).div_euclid(MS_PER_DAY) * MS_PER_DAY - off)
    }

    /// Local calendar date as `YYYY-MM-DD`.
    pub fn local_date(self, offset_min: i32) -> String {
        let local = self.0 + i64::from(offset_min) * 60_000;
        match DateTime::<Utc>::from_timestamp_millis(local) {
            Some(dt) => dt.format("%Y-%m-%d").to_string(),
            None => local.div_euclid(MS_PER_DAY).to_string(),
        }
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match DateTime::<Utc>::from_timestamp_millis(self.0) {
            Some(dt) => f.write_str(&dt.to_rfc3339_opts(SecondsFormat::Millis, true)),
            None => write!(f, "{}ms", self.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    Str,
    Int,
    Float,
    Time,
}

/// A nullable typed column.
#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Str(Vec<Option<String>>),
    Int(Vec<Option<i64>>),
    Float(Vec<Option<f64>>),
    Time(Vec<Option<Timestamp>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Str(v) => v.len(),
            Column::Int(v) => v.len(),
            Column::Float(v) => v.len(),
            Column::Time(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Str(_) => ColumnKind::Str,
            Column::Int(_) => ColumnKind::Int,
            Column::Float(_) => ColumnKind::Float,
            Column::Time(_) => ColumnKind::Time,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind(), ColumnKind::Int | ColumnKind::Float)
    }

    pub fn is_null(&self, row: usize) -> bool {
        match self {
            Column::Str(v) => v[row].is_none(),
            Column::Int(v) => v[row].is_none(),
            Column::Float(v) => v[row].is_none(),
            Column::Time(v) => v[row].is_none(),
        }
    }

    /// Numeric value of a cell; `None` for nulls and string cells.
    pub fn f64_at(&self, row: usize) -> Option<f64> {
        match self {
            Column::Int(v) => v[row].map(|x| x as f64),
            Column::Float(v) => v[row],
            Column::Time(v) => v[row].map(|t| t.millis() as f64),
            Column::Str(_) => None,
        }
    }

    /// Text rendering of a cell, as used for categorical summaries.
    pub fn text_at(&self, row: usize) -> Option<String> {
        match self {
            Column::Str(v) => v[row].clone(),
            Column::Int(v) => v[row].map(|x| x.to_string()),
            Column::Float(v) => v[row].map(format_float),
            Column::Time(v) => v[row].map(|t| t.millis().to_string()),
        }
    }

    pub fn key_at(&self, row: usize) -> KeyValue {
        match self {
            Column::Str(v) => v[row].clone().map_or(KeyValue::Null, KeyValue::Str),
            Column::Int(v) => v[row].map_or(KeyValue::Null, KeyValue::Int),
            Column::Float(v) => v[row].map_or(KeyValue::Null, KeyValue::Float),
            Column::Time(v) => v[row].map_or(KeyValue::Null, KeyValue::Time),
        }
    }

    pub fn take(&self, rows: &[usize]) -> Column {
        fn pick<T: Clone>(v: &[T], rows: &[usize]) -> Vec<T> {
            rows.iter().map(|&i| v[i].clone()).collect()
        }
        match self {
            Column::Str(v) => Column::Str(pick(v, rows)),
            Column::Int(v) => Column::Int(pick(v, rows)),
            Column::Float(v) => Column::Float(pick(v, rows)),
            Column::Time(v) => Column::Time(pick(v, rows)),
        }
    }
}

/// Floats always carry a decimal point or exponent so that they read back as floats.
pub fn format_float(x: f64) -> String {
    let s = x.to_string();
    if s.contains(['.', 'e', 'E']) || !x.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

/// A cell value usable as an ordered grouping key. Nulls sort first.
#[derive(Clone, Debug)]
pub enum KeyValue {
    Null,
    Int(i64),
    Float(f64),
    Time(Timestamp),
    Str(String),
}

impl KeyValue {
    fn rank(&self) -> u8 {
        match self {
            KeyValue::Null => 0,
            KeyValue::Int(_) => 1,
            KeyValue::Float(_) => 2,
            KeyValue::Time(_) => 3,
            KeyValue::Str(_) => 4,
        }
    }
}

impl Ord for KeyValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (KeyValue::Int(a), KeyValue::Int(b)) => a.cmp(b),
            (KeyValue::Float(a), KeyValue::Float(b)) => a.total_cmp(b),
            (KeyValue::Time(a), KeyValue::Time(b)) => a.cmp(b),
            (KeyValue::Str(a), KeyValue::Str(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for KeyValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for KeyValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for KeyValue {}

impl fmt::Display for KeyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyValue::Null => f.write_str("NA"),
            KeyValue::Int(x) => write!(f, "{x}"),
            KeyValue::Float(x) => f.write_str(&format_float(*x)),
            KeyValue::Time(t) => write!(f, "{}", t.millis()),
            KeyValue::Str(s) => f.write_str(s),
        }
    }
}

/// Columnar table of observations. Columns keep insertion order and all have
/// the same length.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservationTable {
    columns: IndexMap<String, Column>,
    rows: usize,
}

impl ObservationTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a table from `(name, column)` pairs.
    pub fn from_columns<I, S>(columns: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Column)>,
        S: Into<String>,
    {
        let mut table = Self::new();
        for (name, col) in columns {
            table.push_column(name, col)?;
        }
        Ok(table)
    }

    pub fn push_column(&mut self, name: impl Into<String>, column: Column) -> Result<()> {
        let name = name.into();
        if self.columns.contains_key(&name) {
            return Err(Error::DuplicateColumn(name));
        }
        if !self.columns.is_empty() && column.len() != self.rows {
            return Err(Error::LengthMismatch {
                column: name,
                expected: self.rows,
                found: column.len(),
            });
        }
        self.rows = column.len();
        self.columns.insert(name, column);
        Ok(())
    }

    /// Adds a column, replacing any existing column of that name in place.
    pub fn set_column(&mut self, name: impl Into<String>, column: Column) -> Result<()> {
        let name = name.into();
        if !self.columns.is_empty() && column.len() != self.rows {
            return Err(Error::LengthMismatch {
                column: name,
                expected: self.rows,
                found: column.len(),
            });
        }
        self.rows = column.len();
        self.columns.insert(name, column);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &Column)> {
        self.columns.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.get(name)
    }

    pub fn require(&self, name: &str) -> Result<&Column> {
        self.column(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn user_at(&self, row: usize) -> Option<&str> {
        match self.column(USER)? {
            Column::Str(v) => v[row].as_deref(),
            _ => None,
        }
    }

    pub fn time_at(&self, row: usize) -> Option<Timestamp> {
        match self.column(TIME)? {
            Column::Time(v) => v[row],
            _ => None,
        }
    }

    /// New table holding the given rows, in the given order.
    pub fn take(&self, rows: &[usize]) -> ObservationTable {
        ObservationTable {
            columns: self
                .columns
                .iter()
                .map(|(k, c)| (k.clone(), c.take(rows)))
                .collect(),
            rows: rows.len(),
        }
    }

    /// Distinct users in ascending order.
    pub fn users(&self) -> Vec<String> {
        let mut users: Vec<String> = (0..self.rows)
            .filter_map(|i| self.user_at(i).map(str::to_string))
            .collect();
        users.sort();
        users.dedup();
        users
    }

    /// Earliest and latest timestamps, if any.
    pub fn time_range(&self) -> Option<(Timestamp, Timestamp)> {
        let mut times = (0..self.rows).filter_map(|i| self.time_at(i));
        let first = times.next()?;
        Some(times.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t))))
    }

    /// Splits a validated table into one sub-table per user, users ascending.
    pub fn split_by_user(&self) -> Vec<(String, ObservationTable)> {
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for i in 0..self.rows {
            if let Some(u) = self.user_at(i) {
                groups.entry(u.to_string()).or_default().push(i);
            }
        }
        groups
            .into_iter()
            .map(|(u, rows)| (u, self.take(&rows)))
            .collect()
    }

    /// Required string column: every cell non-null.
    pub(crate) fn strings(&self, name: &str) -> Result<Vec<&str>> {
        match self.column(name) {
            None => Err(Error::Schema(name.to_string())),
            Some(Column::Str(v)) => v
                .iter()
                .enumerate()
                .map(|(row, s)| {
                    s.as_deref().ok_or_else(|| Error::Type {
                        column: name.to_string(),
                        row,
                    })
                })
                .collect(),
            Some(_) => Err(Error::Type {
                column: name.to_string(),
                row: 0,
            }),
        }
    }

    /// Optional string column: absent column yields all-`None`.
    pub(crate) fn opt_strings(&self, name: &str) -> Result<Vec<Option<&str>>> {
        match self.column(name) {
            None => Ok(vec![None; self.rows]),
            Some(Column::Str(v)) => Ok(v.iter().map(|s| s.as_deref()).collect()),
            Some(Column::Int(_)) | Some(Column::Float(_)) | Some(Column::Time(_)) => {
                Err(Error::Type {
                    column: name.to_string(),
                    row: 0,
                })
            }
        }
    }

    /// Required numeric column: every cell non-null.
    pub(crate) fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let col = self.column(name).ok_or_else(|| Error::Schema(name.to_string()))?;
        if !col.is_numeric() {
            return Err(Error::Type {
                column: name.to_string(),
                row: 0,
            });
        }
        (0..col.len())
            .map(|row| {
                col.f64_at(row).ok_or_else(|| Error::Type {
                    column: name.to_string(),
                    row,
                })
            })
            .collect()
    }

    pub(crate) fn opt_numbers(&self, name: &str) -> Result<Vec<Option<f64>>> {
        match self.column(name) {
            None => Ok(vec![None; self.rows]),
            Some(col) if col.is_numeric() => Ok((0..col.len()).map(|r| col.f64_at(r)).collect()),
            Some(_) => Err(Error::Type {
                column: name.to_string(),
                row: 0,
            }),
        }
    }

    /// `(user, time)` of every row; the table must have been validated.
    pub(crate) fn keys(&self) -> Result<Vec<(&str, Timestamp)>> {
        let users = self.strings(USER)?;
        let times = match self.column(TIME) {
            Some(Column::Time(v)) => v,
            Some(_) => {
                return Err(Error::Type {
                    column: TIME.into(),
                    row: 0,
                })
            }
            None => return Err(Error::Schema(TIME.into())),
        };
        users
            .into_iter()
            .zip(times)
            .enumerate()
            .map(|(row, (u, t))| {
                t.map(|t| (u, t)).ok_or_else(|| Error::Type {
                    column: TIME.into(),
                    row,
                })
            })
            .collect()
    }
}

/// Checks the schema, normalizes the `time` column and sorts rows by
/// `(user, time)`. Ties keep their input order.
pub fn validate(table: &ObservationTable) -> Result<ObservationTable> {
    let users = match table.column(USER) {
        None => return Err(Error::Schema(USER.into())),
        Some(Column::Str(v)) => v,
        Some(_) => {
            return Err(Error::Type {
                column: USER.into(),
                row: 0,
            })
        }
    };
    if let Some(row) = users.iter().position(Option::is_none) {
        return Err(Error::Type {
            column: USER.into(),
            row,
        });
    }

    let times: Vec<Timestamp> = match table.column(TIME) {
        None => return Err(Error::Schema(TIME.into())),
        Some(Column::Time(v)) => v
            .iter()
            .enumerate()
            .map(|(row, t)| {
                t.ok_or(Error::Type {
                    column: TIME.into(),
                    row,
                })
            })
            .collect::<Result<_>>()?,
        Some(Column::Int(v)) => v
            .iter()
            .enumerate()
            .map(|(row, t)| {
                t.and_then(Timestamp::from_millis).ok_or(Error::Type {
                    column: TIME.into(),
                    row,
                })
            })
            .collect::<Result<_>>()?,
        Some(_) => {
            return Err(Error::Type {
                column: TIME.into(),
                row: 0,
            })
        }
    };

    if let Some(col) = table.column(DEVICE) {
        if col.kind() != ColumnKind::Str {
            return Err(Error::Type {
                column: DEVICE.into(),
                row: 0,
            });
        }
    }

    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&a, &b| {
        users[a]
            .as_deref()
            .cmp(&users[b].as_deref())
            .then(times[a].cmp(&times[b]))
    });

    let mut out = table.take(&order);
    let sorted_times = order.iter().map(|&i| Some(times[i])).collect();
    out.set_column(TIME, Column::Time(sorted_times))?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// Windows tile UTC time from the epoch.
    #[default]
    Epoch,
    /// Windows tile local time from local midnight, using the fixed offset.
    LocalMidnight,
}

/// Fixed-width tiling of time into windows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    /// Width in seconds.
    pub width: i64,
    #[serde(default)]
    pub alignment: Alignment,
    /// Minutes east of UTC.
    #[serde(default)]
    pub timezone_offset: i32,
}

impl WindowSpec {
    pub fn new(width_secs: i64, alignment: Alignment, timezone_offset: i32) -> Result<Self> {
        let spec = WindowSpec {
            width: width_secs,
            alignment,
            timezone_offset,
        };
        spec.check()?;
        Ok(spec)
    }

    /// Local calendar days at the given offset.
    pub fn daily(timezone_offset: i32) -> Self {
        WindowSpec {
            width: 86_400,
            alignment: Alignment::LocalMidnight,
            timezone_offset,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.width <= 0 {
            return Err(Error::Config(format!(
                "window width must be positive, got {}",
                self.width
            )));
        }
        Ok(())
    }

    pub fn width_ms(&self) -> i64 {
        self.width * 1000
    }

    fn offset_ms(&self) -> i64 {
        match self.alignment {
            Alignment::Epoch => 0,
            Alignment::LocalMidnight => i64::from(self.timezone_offset) * 60_000,
        }
    }

    /// Start of the window containing `t`.
    pub fn window_start(&self, t: Timestamp) -> Timestamp {
        let width = self.width_ms();
        let off = self.offset_ms();
        Timestamp::from_millis_unchecked((t.millis() + off).div_euclid(width) * width - off)
    }
}

/// Adds (or replaces) the `window_start` column.
pub fn assign_windows(table: &ObservationTable, spec: &WindowSpec) -> Result<ObservationTable> {
    spec.check()?;
    let keys = table.keys()?;
    let starts = keys
        .iter()
        .map(|&(_, t)| Some(spec.window_start(t)))
        .collect();
    let mut out = table.clone();
    out.set_column(WINDOW_START, Column::Time(starts))?;
    Ok(out)
}

/// Applies `fold` once per distinct key, in ascending key order. Rows inside a
/// group are passed in table order.
pub fn group_scan<R, F>(
    table: &ObservationTable,
    key_columns: &[&str],
    mut fold: F,
) -> Result<Vec<(Vec<KeyValue>, R)>>
where
    F: FnMut(&ObservationTable, &[usize]) -> R,
{
    let cols = key_columns
        .iter()
        .map(|name| table.require(name))
        .collect::<Result<Vec<_>>>()?;
    let mut groups: BTreeMap<Vec<KeyValue>, Vec<usize>> = BTreeMap::new();
    for row in 0..table.len() {
        let key = cols.iter().map(|c| c.key_at(row)).collect();
        groups.entry(key).or_default().push(row);
    }
    Ok(groups
        .into_iter()
        .map(|(key, rows)| {
            let r = fold(table, &rows);
            (key, r)
        })
        .collect())
}

/// Consecutive runs of records sharing `(user, window_start)`. Input must be
/// sorted by `(user, time)`.
pub(crate) fn window_runs<T>(
    items: &[T],
    spec: &WindowSpec,
    key: impl Fn(&T) -> (&str, Timestamp),
) -> Vec<(String, Timestamp, Range<usize>)> {
    let mut runs: Vec<(String, Timestamp, Range<usize>)> = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let (user, t) = key(item);
        let ws = spec.window_start(t);
        match runs.last_mut() {
            Some((u, w, range)) if u == user && *w == ws => range.end = i + 1,
            _ => runs.push((user.to_string(), ws, i..i + 1)),
        }
    }
    runs
}

/// Consecutive runs of records sharing a user. Input must be sorted by user.
pub(crate) fn user_runs<T>(items: &[T], user: impl Fn(&T) -> &str) -> Vec<Range<usize>> {
    let mut runs: Vec<Range<usize>> = Vec::new();
    for (i, item) in items.iter().enumerate() {
        match runs.last_mut() {
            Some(r) if user(&items[r.start]) == user(item) => r.end = i + 1,
            _ => runs.push(i..i + 1),
        }
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Column {
        Column::Str(v.iter().map(|x| Some(x.to_string())).collect())
    }

    fn ms(v: &[i64]) -> Column {
        Column::Time(v.iter().map(|&x| Timestamp::from_millis(x)).collect())
    }

    #[test]
    fn validate_sorts_by_user_then_time() {
        let t = ObservationTable::from_columns([
            ("user", s(&["b", "a", "a"])),
            ("time", ms(&[5, 30, 10])),
            ("value", Column::Int(vec![Some(1), Some(2), Some(3)])),
        ])
        .unwrap();
        let v = validate(&t).unwrap();
        assert_eq!(v.column("user").unwrap(), &s(&["a", "a", "b"]));
        assert_eq!(v.column("time").unwrap(), &ms(&[10, 30, 5]));
        assert_eq!(
            v.column("value").unwrap(),
            &Column::Int(vec![Some(3), Some(2), Some(1)])
        );
    }

    #[test]
    fn validate_reports_missing_user() {
        let t = ObservationTable::from_columns([("time", ms(&[1]))]).unwrap();
        match validate(&t) {
            Err(Error::Schema(c)) => assert_eq!(c, "user"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_reports_null_time_row() {
        let t = ObservationTable::from_columns([
            ("user", s(&["a", "a"])),
            ("time", Column::Time(vec![Timestamp::from_millis(1), None])),
        ])
        .unwrap();
        match validate(&t) {
            Err(Error::Type { column, row }) => assert_eq!((column.as_str(), row), ("time", 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_accepts_integer_time_and_empty_tables() {
        let t = ObservationTable::from_columns([
            ("user", s(&["a"])),
            ("time", Column::Int(vec![Some(42)])),
        ])
        .unwrap();
        assert_eq!(validate(&t).unwrap().time_at(0), Timestamp::from_millis(42));

        let empty =
            ObservationTable::from_columns([("user", s(&[])), ("time", ms(&[]))]).unwrap();
        assert!(validate(&empty).unwrap().is_empty());
    }

    #[test]
    fn validate_rejects_numeric_device_and_negative_time() {
        let t = ObservationTable::from_columns([
            ("user", s(&["a"])),
            ("time", Column::Int(vec![Some(-1)])),
        ])
        .unwrap();
        assert!(matches!(validate(&t), Err(Error::Type { row: 0, .. })));

        let t = ObservationTable::from_columns([
            ("user", s(&["a"])),
            ("time", ms(&[1])),
            ("device", Column::Int(vec![Some(1)])),
        ])
        .unwrap();
        assert!(matches!(validate(&t), Err(Error::Type { column, .. }) if column == "device"));
    }

    #[test]
    fn columns_must_have_equal_length() {
        let err = ObservationTable::from_columns([("user", s(&["a"])), ("time", ms(&[1, 2]))]);
        assert!(matches!(err, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn epoch_windows() {
        let day = WindowSpec::new(86_400, Alignment::Epoch, 0).unwrap();
        assert_eq!(day.window_start(Timestamp::EPOCH).millis(), 0);
        assert_eq!(
            day.window_start(Timestamp::from_millis(90_000_000).unwrap())
                .millis(),
            86_400_000
        );
    }

    #[test]
    fn local_midnight_window_at_plus_two_hours() {
        // 2021-06-15T01:00+02:00 belongs to the local day starting 2021-06-15T00:00+02:00.
        let spec = WindowSpec::daily(120);
        let t = Timestamp::from_millis(1_623_711_600_000).unwrap();
        assert_eq!(spec.window_start(t).millis(), 1_623_708_000_000);
        assert_eq!(t.local_hour(120), 1);
        assert_eq!(t.local_date(120), "2021-06-15");
        assert_eq!(t.local_date(0), "2021-06-14");
    }

    #[test]
    fn zero_width_window_is_rejected() {
        assert!(WindowSpec::new(0, Alignment::Epoch, 0).is_err());
    }

    #[test]
    fn group_scan_counts_and_sums() {
        let t = validate(
            &ObservationTable::from_columns([
                ("user", s(&["b", "a", "a"])),
                ("time", ms(&[1, 2, 3])),
                ("x", Column::Float(vec![Some(1.5), Some(2.0), Some(4.0)])),
            ])
            .unwrap(),
        )
        .unwrap();
        let counts = group_scan(&t, &["user"], |_, rows| rows.len()).unwrap();
        assert_eq!(
            counts,
            vec![
                (vec![KeyValue::Str("a".into())], 2),
                (vec![KeyValue::Str("b".into())], 1)
            ]
        );

        let sums = group_scan(&t, &["user"], |tab, rows| {
            rows.iter()
                .map(|&r| tab.column("x").unwrap().f64_at(r).unwrap())
                .sum::<f64>()
        })
        .unwrap();
        let mut brute: BTreeMap<String, f64> = BTreeMap::new();
        for r in 0..t.len() {
            *brute.entry(t.user_at(r).unwrap().to_string()).or_default() +=
                t.column("x").unwrap().f64_at(r).unwrap();
        }
        let got: Vec<f64> = sums.into_iter().map(|(_, v)| v).collect();
        assert_eq!(got, brute.into_values().collect::<Vec<_>>());

        assert!(matches!(
            group_scan(&t, &["nope"], |_, r| r.len()),
            Err(Error::UnknownColumn(_))
        ));
        let empty =
            ObservationTable::from_columns([("user", s(&[])), ("time", ms(&[]))]).unwrap();
        assert!(group_scan(&empty, &["user"], |_, r| r.len()).unwrap().is_empty());
    }

    #[test]
    fn iso_parsing() {
        assert_eq!(
            Timestamp::parse_iso8601("2013-03-27T12:00:00+02:00").map(Timestamp::millis),
            Some(1_364_378_400_000)
        );
        assert_eq!(
            Timestamp::parse_iso8601("2013-03-27T10:00:00").map(Timestamp::millis),
            Some(1_364_378_400_000)
        );
        assert_eq!(
            Timestamp::parse_iso8601("2013-03-27 10:00:00.250").map(Timestamp::millis),
            Some(1_364_378_400_250)
        );
        assert!(Timestamp::parse_iso8601("yesterday").is_none());
        assert!(Timestamp::from_millis(-1).is_none());
        assert_eq!(Timestamp::from_secs_f64(1.2345).unwrap().millis(), 1235);
    }

    #[test]
    fn float_formatting_keeps_a_decimal_point() {
        assert_eq!(format_float(3.0), "3.0");
        assert_eq!(format_float(0.1), "0.1");
        let big = format_float(1e300);
        assert!(big.ends_with(".0"));
        assert_eq!(big.parse::<f64>().unwrap(), 1e300);
    }
}
