use std::path::Path;

use rusqlite::types::Value;
use rusqlite::{Connection, OpenFlags};

use super::{parse_time, RawTime, SourceSpec, TimeFormat};
use crate::error::{Error, Result};
use crate::schema::{
    format_float, validate, Column, ObservationTable, DEVICE, TIME, USER, WINDOW_START,
};

fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

/// Reads one table from a SQLite database, opened read-only. Column types
/// follow the storage classes found: all INTEGER → integer, INTEGER/REAL →
/// float, anything with TEXT → string.
pub fn read_sqlite(spec: &SourceSpec) -> Result<ObservationTable> {
    spec.check()?;
    let table_name = spec.table_name.as_deref().unwrap_or_default();
    let sql_err = |source| Error::Sqlite {
        path: spec.path.clone(),
        source,
    };
    if !spec.path.is_file() {
        return Err(Error::io(
            &spec.path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such database file"),
        ));
    }
    let conn = Connection::open_with_flags(
        &spec.path,
        OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX,
    )
    .map_err(sql_err)?;

    let exists: bool = conn
        .query_row(
            "SELECT EXISTS(SELECT 1 FROM sqlite_master WHERE type IN ('table','view') AND name = ?1)",
            [table_name],
            |r| r.get(0),
        )
        .map_err(sql_err)?;
    if !exists {
        return Err(Error::MissingTable(table_name.to_string()));
    }

    let mut stmt = conn
        .prepare(&format!("SELECT * FROM {}", quote_ident(table_name)))
        .map_err(sql_err)?;
    let names: Vec<String> = stmt
        .column_names()
        .iter()
        .map(|n| spec.standard_name(n).to_string())
        .collect();
    let mut cells: Vec<Vec<Value>> = vec![Vec::new(); names.len()];
    let mut rows = stmt.query([]).map_err(sql_err)?;
    while let Some(row) = rows.next().map_err(sql_err)? {
        for (i, col) in cells.iter_mut().enumerate() {
            col.push(row.get::<_, Value>(i).map_err(sql_err)?);
        }
    }

    let mut table = ObservationTable::new();
    for (name, col) in names.into_iter().zip(cells) {
        let column = match name.as_str() {
            USER | DEVICE => text_column(&name, col)?,
            TIME | WINDOW_START => {
                let format = if name == TIME {
                    spec.time_format
                } else {
                    TimeFormat::EpochMs
                };
                time_column(&name, col, format)?
            }
            _ => infer_value_column(&name, col)?,
        };
        table.push_column(name, column)?;
    }
    validate(&table)
}

fn text_column(name: &str, cells: Vec<Value>) -> Result<Column> {
    cells
        .into_iter()
        .enumerate()
        .map(|(row, v)| match v {
            Value::Null => Ok(None),
            Value::Integer(i) => Ok(Some(i.to_string())),
            Value::Real(x) => Ok(Some(format_float(x))),
            Value::Text(s) => Ok(Some(s)),
            Value::Blob(_) => Err(Error::Type {
                column: name.to_string(),
                row,
            }),
        })
        .collect::<Result<_>>()
        .map(Column::Str)
}

fn time_column(name: &str, cells: Vec<Value>, format: TimeFormat) -> Result<Column> {
    cells
        .iter()
        .enumerate()
        .map(|(row, v)| {
            let raw = match v {
                Value::Null => return Ok(None),
                Value::Integer(i) => RawTime::Int(*i),
                Value::Real(x) => RawTime::Real(*x),
                Value::Text(s) => RawTime::Text(s),
                Value::Blob(_) => {
                    return Err(Error::Type {
                        column: name.to_string(),
                        row,
                    })
                }
            };
            parse_time(raw, format).map(Some).ok_or_else(|| Error::Parse {
                row,
                column: name.to_string(),
                message: format!("cannot read {v:?} as a {format:?} timestamp"),
            })
        })
        .collect::<Result<_>>()
        .map(Column::Time)
}

fn infer_value_column(name: &str, cells: Vec<Value>) -> Result<Column> {
    let has = |pred: fn(&Value) -> bool| cells.iter().any(pred);
    if has(|v| matches!(v, Value::Text(_) | Value::Blob(_))) || cells.iter().all(|v| *v == Value::Null) {
        return text_column(name, cells);
    }
    if has(|v| matches!(v, Value::Real(_))) {
        return Ok(Column::Float(
            cells
                .into_iter()
                .map(|v| match v {
                    Value::Integer(i) => Some(i as f64),
                    Value::Real(x) => Some(x),
                    _ => None,
                })
                .collect(),
        ));
    }
    Ok(Column::Int(
        cells
            .into_iter()
            .map(|v| match v {
                Value::Integer(i) => Some(i),
                _ => None,
            })
            .collect(),
    ))
}

/// Writes `table` into a new SQLite table (replacing one of the same name).
/// Timestamps are stored as INTEGER epoch milliseconds. Used to build fixtures;
/// ingestion itself never writes.
pub fn write_sqlite(table: &ObservationTable, path: &Path, table_name: &str) -> Result<()> {
    let sql_err = |source| Error::Sqlite {
        path: path.to_path_buf(),
        source,
    };
    let mut conn = Connection::open(path).map_err(sql_err)?;
    let tx = conn.transaction().map_err(sql_err)?;
    let ident = quote_ident(table_name);
    let defs: Vec<String> = table
        .columns()
        .map(|(name, col)| {
            let ty = match col {
                Column::Str(_) => "TEXT",
                Column::Int(_) | Column::Time(_) => "INTEGER",
                Column::Float(_) => "REAL",
            };
            format!("{} {ty}", quote_ident(name))
        })
        .collect();
    tx.execute(&format!("DROP TABLE IF EXISTS {ident}"), [])
        .map_err(sql_err)?;
    tx.execute(&format!("CREATE TABLE {ident} ({})", defs.join(", ")), [])
        .map_err(sql_err)?;
    {
        let placeholders = vec!["?"; defs.len()].join(", ");
        let mut stmt = tx
            .prepare(&format!("INSERT INTO {ident} VALUES ({placeholders})"))
            .map_err(sql_err)?;
        let cols: Vec<&Column> = table.columns().map(|(_, c)| c).collect();
        for row in 0..table.len() {
            let values: Vec<Value> = cols
                .iter()
                .map(|c| match c {
                    Column::Str(v) => v[row].clone().map_or(Value::Null, Value::Text),
                    Column::Int(v) => v[row].map_or(Value::Null, Value::Integer),
                    Column::Float(v) => v[row].map_or(Value::Null, Value::Real),
                    Column::Time(v) => v[row].map_or(Value::Null, |t| Value::Integer(t.millis())),
                })
                .collect();
            stmt.execute(rusqlite::params_from_iter(values))
                .map_err(sql_err)?;
        }
    }
    tx.commit().map_err(sql_err)
}
