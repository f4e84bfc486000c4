//! Per-window feature output shared by every extractor.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::schema::Timestamp;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureRow {
    pub user: String,
    pub window_start: Timestamp,
    /// One entry per feature column; `None` marks an absent value.
    pub values: Vec<Option<f64>>,
}

/// Rows keyed by `(user, window_start)`, kept sorted and unique.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FeatureTable {
    names: Vec<String>,
    rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        FeatureTable {
            names: names.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Inserts a row, keeping key order.
    ///
    /// # Panics
    /// If `values` does not have one entry per feature column.
    pub fn insert(
        &mut self,
        user: impl Into<String>,
        window_start: Timestamp,
        values: Vec<Option<f64>>,
    ) -> Result<()> {
        assert_eq!(values.len(), self.names.len(), "feature row width");
        let user = user.into();
        let pos = self
            .rows
            .binary_search_by(|r| (r.user.as_str(), r.window_start).cmp(&(&user, window_start)));
        match pos {
            Ok(_) => Err(Error::DuplicateKey {
                user,
                window_start: window_start.millis(),
            }),
            Err(at) => {
                self.rows.insert(
                    at,
                    FeatureRow {
                        user,
                        window_start,
                        values,
                    },
                );
                Ok(())
            }
        }
    }

    pub fn row(&self, user: &str, window_start: Timestamp) -> Option<&FeatureRow> {
        self.rows
            .binary_search_by(|r| (r.user.as_str(), r.window_start).cmp(&(user, window_start)))
            .ok()
            .map(|i| &self.rows[i])
    }

    /// Value of one cell; `None` when the row, the column or the value is absent.
    pub fn get(&self, user: &str, window_start: Timestamp, name: &str) -> Option<f64> {
        let col = self.index_of(name)?;
        self.row(user, window_start)?.values[col]
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let col = self.index_of(name)?;
        Some(self.rows.iter().map(|r| r.values[col]).collect())
    }

    /// Keeps only the named columns, in the order given.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<FeatureTable> {
        let idx = names
            .iter()
            .map(|n| {
                self.index_of(n.as_ref())
                    .ok_or_else(|| Error::UnknownColumn(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureTable {
            names: names.iter().map(|n| n.as_ref().to_string()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| FeatureRow {
                    user: r.user.clone(),
                    window_start: r.window_start,
                    values: idx.iter().map(|&i| r.values[i]).collect(),
                })
                .collect(),
        })
    }

    /// Stacks tables with disjoint keys. Columns are the union in order of
    /// first appearance; cells missing from a source are absent.
    pub fn concat(tables: &[FeatureTable]) -> Result<FeatureTable> {
        let mut names: Vec<String> = Vec::new();
        for t in tables {
            for n in &t.names {
                if !names.contains(n) {
                    names.push(n.clone());
                }
            }
        }
        let mut out = FeatureTable::new(names.clone());
        for t in tables {
            let map: Vec<usize> = t
                .names
                .iter()
                .map(|n| names.iter().position(|m| m == n).unwrap_or_default())
                .collect();
            for r in &t.rows {
                let mut values = vec![None; names.len()];
                for (i, v) in r.values.iter().enumerate() {
                    values[map[i]] = *v;
                }
                out.insert(r.user.clone(), r.window_start, values)?;
            }
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header = vec!["user".to_string(), "window_start".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.user.clone(), r.window_start.millis().to_string()];
            rec.extend(
                r.values
                    .iter()
                    .map(|v| v.map(|x| x.to_string()).unwrap_or_default()),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })
    }

    /// Reads the format produced by [`FeatureTable::write_csv`].
    pub fn read_csv<R: Read>(reader: R) -> Result<FeatureTable> {
        let mut r = csv::ReaderBuilder::new().from_reader(reader);
        let csv_err = |source| Error::Csv {
            path: "<features>".into(),
            source,
        };
        let header = r.headers().map_err(csv_err)?.clone();
        if header.get(0) != Some("user") {
            return Err(Error::Schema("user".into()));
        }
        if header.get(1) != Some("window_start") {
            return Err(Error::Schema("window_start".into()));
        }
        let names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut table = FeatureTable::new(names.clone());
        for (row, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let parse_err = |column: &str, message: String| Error::Parse {
                row,
                column: column.to_string(),
                message,
            };
            let ws = rec
                .get(1)
                .and_then(|s| s.parse::<i64>().ok())
                .map(Timestamp::from_millis_unchecked)
                .ok_or_else(|| parse_err("window_start", "expected epoch milliseconds".into()))?;
            let values = names
                .iter()
                .enumerate()
                .map(|(i, name)| match rec.get(i + 2).unwrap_or("") {
                    "" => Ok(None),
                    s => s
                        .parse::<f64>()
                        .map(Some)
                        .map_err(|e| parse_err(name, e.to_string())),
                })
                .collect::<Result<Vec<_>>>()?;
            table.insert(rec.get(0).unwrap_or_default(), ws, values)?;
        }
        Ok(table)
    }

    pub fn load_csv(path: &Path) -> Result<FeatureTable> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    /// Column-oriented JSON: `{"columns": [...], "rows": [...]}`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Builds one row of values for a fixed catalog of feature names.
pub(crate) struct RowBuilder<'a> {
    names: &'a [&'a str],
    values: BTreeMap<usize, f64>,
}

impl<'a> RowBuilder<'a> {
    pub fn new(names: &'a [&'a str]) -> Self {
        RowBuilder {
            names,
            values: BTreeMap::new(),
        }
    }

    /// # Panics
    /// If `name` is not in the catalog.
    pub fn set(&mut self, name: &str, value: impl Into<Option<f64>>) -> &mut Self {
        let idx = self
            .names
            .iter()
            .position(|n| *n == name)
            .unwrap_or_else(|| panic!("`{name}` is not a catalog feature"));
        match value.into() {
            Some(v) if v.is_finite() => {
                self.values.insert(idx, v);
            }
            _ => {
                self.values.remove(&idx);
            }
        }
        self
    }

    pub fn finish(&self) -> Vec<Option<f64>> {
        (0..self.names.len())
            .map(|i| self.values.get(&i).copied())
            .collect()
    }
}

/// A list of `(user, time)` events, written as a two-column CSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EventList {
    pub events: Vec<(String, Timestamp)>,
}

impl EventList {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(["user", "time"])?;
        for (u, t) in &self.events {
            w.write_record([u.as_str(), &t.millis().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })
    }
}
