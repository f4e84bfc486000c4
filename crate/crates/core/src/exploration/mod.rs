//! Data-quality and summary computations: categorical counts, windowed
//! counts, line series, punchcards and missingness grids.

mod svg;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use svg::{render_bar, render_heatmap, render_line, SvgStyle};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::schema::{Column, ObservationTable, Timestamp, WindowSpec, USER};
use crate::stats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Count,
    Mean,
    Sum,
}

/// A labelled 2-D grid stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplorationGrid {
    pub row_label: String,
    pub col_label: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: Vec<Option<f64>>,
    pub aggregation: Aggregation,
}

impl ExplorationGrid {
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row * self.cols.len() + col]
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Sum of the defined cells.
    pub fn total(&self) -> f64 {
        self.cells.iter().flatten().sum()
    }

    /// `row,col,value`, one line per cell; absent cells have an empty value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv_writer(writer);
        let mut run = || -> csv::Result<()> {
            w.write_record([self.row_label.as_str(), &self.col_label, "value"])?;
            for (r, row) in self.rows.iter().enumerate() {
                for (c, col) in self.cols.iter().enumerate() {
                    w.write_record([row.as_str(), col, &cell_text(self.get(r, c))])?;
                }
            }
            w.flush()?;
            Ok(())
        };
        run().map_err(csv_error)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Count,
    Mean,
}

/// Per-user `(window_start, value)` points in time order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub user: String,
    pub points: Vec<(Timestamp, f64)>,
    pub statistic: Statistic,
}

/// `user,window_start,value` for a list of series.
pub fn write_series_csv<W: Write>(series: &[SeriesSummary], writer: W) -> Result<()> {
    let mut w = csv_writer(writer);
    let mut run = || -> csv::Result<()> {
        w.write_record(["user", "window_start", "value"])?;
        for s in series {
            for (t, v) in &s.points {
                w.write_record([s.user.as_str(), &t.millis().to_string(), &v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    };
    run().map_err(csv_error)
}

pub fn series_to_json(series: &[SeriesSummary]) -> Result<String> {
    Ok(serde_json::to_string_pretty(series)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CategoryCount {
    pub group: Option<String>,
    pub value: String,
    pub count: usize,
}

/// Value counts of `column`, per group if `group_by` is given. Groups are in
/// ascending order; within a group counts descend and ties are broken by
/// value. Nulls count as `NA`.
pub fn categorical_counts(
    table: &ObservationTable,
    column: &str,
    group_by: Option<&str>,
) -> Result<Vec<CategoryCount>> {
    let col = table.require(column)?;
    let group = group_by.map(|g| table.require(g)).transpose()?;
    let mut counts: BTreeMap<Option<String>, BTreeMap<String, usize>> = BTreeMap::new();
    for row in 0..table.len() {
        let g = group.map(|g| g.text_at(row).unwrap_or_else(|| "NA".into()));
        let v = col.text_at(row).unwrap_or_else(|| "NA".into());
        *counts.entry(g).or_default().entry(v).or_default() += 1;
    }
    let mut out = Vec::new();
    for (g, values) in counts {
        let mut values: Vec<(String, usize)> = values.into_iter().collect();
        values.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out.extend(values.into_iter().map(|(value, count)| CategoryCount {
            group: g.clone(),
            value,
            count,
        }));
    }
    Ok(out)
}

pub fn write_counts_csv<W: Write>(counts: &[CategoryCount], writer: W) -> Result<()> {
    let mut w = csv_writer(writer);
    let mut run = || -> csv::Result<()> {
        w.write_record(["group", "value", "count"])?;
        for c in counts {
            w.write_record([
                c.group.as_deref().unwrap_or(""),
                &c.value,
                &c.count.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    };
    run().map_err(csv_error)
}

/// Minimum, quartiles and maximum with linear interpolation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumber {
    pub fn of(xs: &[f64]) -> Option<FiveNumber> {
        Some(FiveNumber {
            min: stats::min(xs)?,
            q1: stats::quantile(xs, 0.25)?,
            median: stats::median(xs)?,
            q3: stats::quantile(xs, 0.75)?,
            max: stats::max(xs)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountSummary {
    pub series: Vec<SeriesSummary>,
    /// Total observations per user.
    pub totals: Vec<(String, f64)>,
    /// Spread of the per-user totals.
    pub distribution: Option<FiveNumber>,
}

/// Observation counts per user and window, and the spread of per-user totals.
pub fn count_summary(table: &ObservationTable, window: &WindowSpec) -> Result<CountSummary> {
    window.check()?;
    let keys = table.keys()?;
    let mut counts: BTreeMap<&str, BTreeMap<Timestamp, f64>> = BTreeMap::new();
    for (user, t) in keys {
        *counts
            .entry(user)
            .or_default()
            .entry(window.window_start(t))
            .or_default() += 1.0;
    }
    let series = counts
        .iter()
        .map(|(u, pts)| SeriesSummary {
            user: u.to_string(),
            points: pts.iter().map(|(&t, &v)| (t, v)).collect(),
            statistic: Statistic::Count,
        })
        .collect();
    let totals: Vec<(String, f64)> = counts
        .iter()
        .map(|(u, pts)| (u.to_string(), pts.values().sum()))
        .collect();
    let distribution = FiveNumber::of(&totals.iter().map(|t| t.1).collect::<Vec<_>>());
    Ok(CountSummary {
        series,
        totals,
        distribution,
    })
}

fn numeric_column<'a>(table: &'a ObservationTable, name: &str) -> Result<&'a Column> {
    let col = table.require(name)?;
    if !col.is_numeric() {
        return Err(Error::NonNumericColumn(name.to_string()));
    }
    Ok(col)
}

/// Windowed mean (or count of non-null values) of `value_column` per user.
/// Windows without values produce no point.
pub fn line_series(
    table: &ObservationTable,
    value_column: &str,
    window: &WindowSpec,
    statistic: Statistic,
) -> Result<Vec<SeriesSummary>> {
    window.check()?;
    let col = numeric_column(table, value_column)?;
    let keys = table.keys()?;
    let mut acc: BTreeMap<&str, BTreeMap<Timestamp, Vec<f64>>> = BTreeMap::new();
    for (row, (user, t)) in keys.into_iter().enumerate() {
        if let Some(v) = col.f64_at(row) {
            acc.entry(user)
                .or_default()
                .entry(window.window_start(t))
                .or_default()
                .push(v);
        }
    }
    Ok(acc
        .into_iter()
        .map(|(user, windows)| SeriesSummary {
            user: user.to_string(),
            points: windows
                .into_iter()
                .map(|(t, mut vs)| {
                    let v = match statistic {
                        Statistic::Count => vs.len() as f64,
                        Statistic::Mean => {
                            // Summed in sorted order so row order cannot
                            // change the last bits.
                            vs.sort_by(f64::total_cmp);
                            stats::mean(&vs).expect("non-empty window")
                        }
                    };
                    (t, v)
                })
                .collect(),
            statistic,
        })
        .collect())
}

/// One feature column as per-user series over window starts. Absent cells
/// give no point.
pub fn feature_series(features: &FeatureTable, name: &str) -> Result<Vec<SeriesSummary>> {
    let idx = features
        .index_of(name)
        .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
    let mut out: Vec<SeriesSummary> = Vec::new();
    for row in features.rows() {
        if out.last().is_none_or(|s| s.user != row.user) {
            out.push(SeriesSummary {
                user: row.user.clone(),
                points: Vec::new(),
                statistic: Statistic::Mean,
            });
        }
        if let Some(v) = row.values[idx] {
            out.last_mut().expect("pushed above").points.push((row.window_start, v));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PunchcardRows {
    #[default]
    User,
    /// Local calendar date.
    Date,
}

/// Observation counts (or means of `value_column`) per row key and local
/// hour of day. Cells without data are absent.
pub fn punchcard(
    table: &ObservationTable,
    value_column: Option<&str>,
    rows: PunchcardRows,
    tz_offset_min: i32,
) -> Result<ExplorationGrid> {
    let col = value_column.map(|c| numeric_column(table, c)).transpose()?;
    let keys = table.keys()?;
    let mut acc: BTreeMap<String, [Vec<f64>; 24]> = BTreeMap::new();
    for (row, (user, t)) in keys.into_iter().enumerate() {
        let key = match rows {
            PunchcardRows::User => user.to_string(),
            PunchcardRows::Date => t.local_date(tz_offset_min),
        };
        let value = match col {
            Some(c) => match c.f64_at(row) {
                Some(v) => v,
                None => continue,
            },
            None => 1.0,
        };
        acc.entry(key).or_insert_with(|| std::array::from_fn(|_| Vec::new()))
            [t.local_hour(tz_offset_min) as usize]
            .push(value);
    }
    let cells = acc
        .values()
        .flat_map(|hours| {
            hours.iter().map(|vs| match (col, vs.is_empty()) {
                (_, true) => None,
                (None, false) => Some(vs.len() as f64),
                (Some(_), false) => {
                    let mut vs = vs.clone();
                    vs.sort_by(f64::total_cmp);
                    stats::mean(&vs)
                }
            })
        })
        .collect();
    Ok(ExplorationGrid {
        row_label: match rows {
            PunchcardRows::User => USER.into(),
            PunchcardRows::Date => "date".into(),
        },
        col_label: "hour".into(),
        rows: acc.into_keys().collect(),
        cols: (0..24).map(|h| h.to_string()).collect(),
        cells,
        aggregation: if col.is_some() {
            Aggregation::Mean
        } else {
            Aggregation::Count
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Missingness {
    /// Users × windows: 1 observed, 0 empty, absent outside the user's span.
    pub grid: ExplorationGrid,
    pub missing_fraction: Vec<(String, f64)>,
}

impl Missingness {
    pub fn write_fraction_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv_writer(writer);
        let mut run = || -> csv::Result<()> {
            w.write_record(["user", "missing_fraction"])?;
            for (u, f) in &self.missing_fraction {
                w.write_record([u.as_str(), &f.to_string()])?;
            }
            w.flush()?;
            Ok(())
        };
        run().map_err(csv_error)
    }
}

/// Windows with and without observations. Each user's expected windows run
/// from the window of their first observation to that of their last, unless
/// `span` fixes one range for everybody.
pub fn missingness(
    table: &ObservationTable,
    window: &WindowSpec,
    span: Option<(Timestamp, Timestamp)>,
) -> Result<Missingness> {
    window.check()?;
    if let Some((a, b)) = span {
        if b < a {
            return Err(Error::Config("missingness span ends before it starts".into()));
        }
    }
    let keys = table.keys()?;
    let mut seen: BTreeMap<&str, BTreeSet<Timestamp>> = BTreeMap::new();
    for (user, t) in keys {
        seen.entry(user).or_default().insert(window.window_start(t));
    }
    let width = window.width_ms();
    let ranges: BTreeMap<&str, (Timestamp, Timestamp)> = seen
        .iter()
        .map(|(u, ws)| {
            let r = match span {
                Some((a, b)) => (window.window_start(a), window.window_start(b)),
                None => (*ws.first().expect("non-empty"), *ws.last().expect("non-empty")),
            };
            (*u, r)
        })
        .collect();
    let mut cols: Vec<Timestamp> = Vec::new();
    if let (Some(lo), Some(hi)) = (
        ranges.values().map(|r| r.0).min(),
        ranges.values().map(|r| r.1).max(),
    ) {
        let mut t = lo;
        while t <= hi {
            cols.push(t);
            t = t.plus_millis(width);
        }
    }
    let mut cells = Vec::with_capacity(seen.len() * cols.len());
    let mut fractions = Vec::new();
    for (user, ws) in &seen {
        let (a, b) = ranges[user];
        let mut expected = 0usize;
        let mut filled = 0usize;
        for &c in &cols {
            if c < a || c > b {
                cells.push(None);
                continue;
            }
            expected += 1;
            let hit = ws.contains(&c);
            filled += hit as usize;
            cells.push(Some(if hit { 1.0 } else { 0.0 }));
        }
        fractions.push((user.to_string(), (expected - filled) as f64 / expected as f64));
    }
    Ok(Missingness {
        grid: ExplorationGrid {
            row_label: USER.into(),
            col_label: "window_start".into(),
            rows: seen.keys().map(|u| u.to_string()).collect(),
            cols: cols.iter().map(|t| t.millis().to_string()).collect(),
            cells,
            aggregation: Aggregation::Count,
        },
        missing_fraction: fractions,
    })
}

fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer)
}

fn csv_error(source: csv::Error) -> Error {
    Error::Csv {
        path: Path::new("<output>").to_path_buf(),
        source,
    }
}

fn cell_text(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
