//! Joining feature tables and pairwise correlation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::schema::Timestamp;

/// Outer join on `(user, window_start)`. A feature name used by more than one
/// table gets a `_<label>` suffix in every table that has it.
pub fn join_features(tables: &[(&str, &FeatureTable)]) -> Result<FeatureTable> {
    let mut uses: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, t) in tables {
        for n in t.names() {
            *uses.entry(n.as_str()).or_default() += 1;
        }
    }
    let mut names = Vec::new();
    let mut seen = BTreeSet::new();
    for (label, t) in tables {
        for n in t.names() {
            let name = if uses[n.as_str()] > 1 {
                format!("{n}_{label}")
            } else {
                n.clone()
            };
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateColumn(name));
            }
            names.push(name);
        }
    }

    let mut rows: BTreeMap<(String, Timestamp), Vec<Option<f64>>> = BTreeMap::new();
    let mut offset = 0;
    for (_, t) in tables {
        for r in t.rows() {
            let values = rows
                .entry((r.user.clone(), r.window_start))
                .or_insert_with(|| vec![None; names.len()]);
            values[offset..offset + r.values.len()].copy_from_slice(&r.values);
        }
        offset += t.names().len();
    }
    let mut out = FeatureTable::new(names);
    for ((user, ws), values) in rows {
        out.insert(user, ws, values)?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Pearson,
    Spearman,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pearson => "pearson",
            Method::Spearman => "spearman",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "pearson" => Ok(Method::Pearson),
            "spearman" => Ok(Method::Spearman),
            other => Err(Error::Config(format!(
                "unknown correlation method `{other}` (expected pearson or spearman)"
            ))),
        }
    }
}

/// Symmetric matrix of pairwise-complete correlations, row-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub method: Method,
    pub values: Vec<Option<f64>>,
    pub n_pairs: Vec<usize>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.names.len() + j]
    }

    pub fn pairs(&self, i: usize, j: usize) -> usize {
        self.n_pairs[i * self.names.len() + j]
    }

    /// Header `feature,<names>`, then one row per feature. Absent cells are
    /// empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header = vec!["feature".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (i, n) in self.names.iter().enumerate() {
            let mut rec = vec![n.clone()];
            rec.extend((0..self.len()).map(|j| self.get(i, j).map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Pearson r, or `None` for fewer than 3 pairs or a constant input.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "paired samples");
    let n = x.len();
    if n < 3 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 || x.iter().all(|v| *v == x[0]) || y.iter().all(|v| *v == y[0]) {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn mid_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&mid_ranks(x), &mid_ranks(y))
}

/// Correlation of every pair of feature columns over the rows where both are
/// present.
pub fn correlate(features: &FeatureTable, method: Method) -> Result<CorrelationMatrix> {
    let k = features.names().len();
    if k < 2 {
        return Err(Error::TooFewColumns(k));
    }
    let columns: Vec<Vec<Option<f64>>> = (0..k)
        .map(|j| features.rows().iter().map(|r| r.values[j]).collect())
        .collect();
    let mut values = vec![None; k * k];
    let mut n_pairs = vec![0; k * k];
    for i in 0..k {
        for j in i..k {
            let (x, y): (Vec<f64>, Vec<f64>) = columns[i]
                .iter()
                .zip(&columns[j])
                .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                .unzip();
            let r = match method {
                Method::Pearson => pearson(&x, &y),
                Method::Spearman => spearman(&x, &y),
            };
            let r = if i == j { r.map(|_| 1.0) } else { r };
            for (a, b) in [(i, j), (j, i)] {
                values[a * k + b] = r;
                n_pairs[a * k + b] = x.len();
            }
        }
    }
    Ok(CorrelationMatrix {
        names: features.names().to_vec(),
        method,
        values,
        n_pairs,
    })
}
