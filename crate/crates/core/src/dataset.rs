//! Binary fingerprint matrices with regression targets.
//!
//! Features are stored column-major: every interaction value is a product over
//! a handful of columns, so scanning whole columns is the hot path.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Prefix marking a materialized complement column.
pub const COMPLEMENT_PREFIX: &str = "NOT_";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    ids: Vec<String>,
    feature_names: Vec<String>,
    columns: Vec<Vec<u8>>,
    targets: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from row-major feature rows.
    pub fn from_rows(
        ids: Vec<String>,
        feature_names: Vec<String>,
        rows: &[Vec<u8>],
        targets: Vec<f64>,
    ) -> Result<Self> {
        let n_f = feature_names.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); n_f];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_f {
                return Err(Error::Shape {
                    expected: n_f,
                    actual: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Error::Format {
                        row: i,
                        column: feature_names[j].clone(),
                        message: format!("fingerprint value {v} is not 0 or 1"),
                    });
                }
                columns[j].push(v);
            }
        }
        Self::from_columns(ids, feature_names, columns, targets)
    }

    pub fn from_columns(
        ids: Vec<String>,
        feature_names: Vec<String>,
        columns: Vec<Vec<u8>>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        let n_s = targets.len();
        if ids.len() != n_s {
            return Err(Error::Shape {
                expected: n_s,
                actual: ids.len(),
            });
        }
        if columns.len() != feature_names.len() {
            return Err(Error::Shape {
                expected: feature_names.len(),
                actual: columns.len(),
            });
        }
        let mut seen = HashSet::with_capacity(feature_names.len());
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Header(format!(
                    "duplicate fingerprint name `{name}`"
                )));
            }
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n_s {
                return Err(Error::Shape {
                    expected: n_s,
                    actual: col.len(),
                });
            }
            if let Some(i) = col.iter().position(|&v| v > 1) {
                return Err(Error::Format {
                    row: i,
                    column: feature_names[j].clone(),
                    message: format!("fingerprint value {} is not 0 or 1", col[i]),
                });
            }
        }
        if let Some(i) = targets.iter().position(|t| !t.is_finite()) {
            return Err(Error::Format {
                row: i,
                column: "target".into(),
                message: "target is not finite".into(),
            });
        }
        Ok(Self {
            ids,
            feature_names,
            columns,
            targets,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    pub fn n_fingerprints(&self) -> usize {
        self.feature_names.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn column(&self, j: usize) -> &[u8] {
        &self.columns[j]
    }

    pub fn value(&self, i: usize, j: usize) -> u8 {
        self.columns[j][i]
    }

    pub fn row(&self, i: usize) -> Vec<u8> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Population variance of the targets.
    pub fn target_variance(&self) -> f64 {
        let n = self.n_samples();
        if n == 0 {
            return 0.0;
        }
        let mean = self.targets.iter().sum::<f64>() / n as f64;
        self.targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n as f64
    }

    /// Appends a `NOT_<name>` column holding `1 - x` for every column.
    pub fn augment_complements(&self) -> Result<Self> {
        if let Some(name) = self
            .feature_names
            .iter()
            .find(|n| n.starts_with(COMPLEMENT_PREFIX))
        {
            return Err(Error::Augment(name.clone()));
        }
        let mut names = self.feature_names.clone();
        let mut columns = self.columns.clone();
        for (name, col) in self.feature_names.iter().zip(&self.columns) {
            names.push(format!("{COMPLEMENT_PREFIX}{name}"));
            columns.push(col.iter().map(|&v| 1 - v).collect());
        }
        Self::from_columns(self.ids.clone(), names, columns, self.targets.clone())
    }

    /// Draws `n` rows without replacement. Selected rows keep their original
    /// relative order, so `n == n_samples()` returns an identical copy.
    pub fn subsample(&self, n: usize, seed: u64) -> Result<Self> {
        if n == 0 || n > self.n_samples() {
            return Err(Error::Range {
                what: "subsample size",
                value: n,
                min: 1,
                max: self.n_samples(),
            });
        }
        let mut order: Vec<usize> = (0..self.n_samples()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let mut picked = order[..n].to_vec();
        picked.sort_unstable();
        Ok(self.select_rows(&picked))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
            targets: rows.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    /// Copy with targets shifted to zero mean.
    pub fn mean_centered(&self) -> Self {
        let n = self.n_samples().max(1) as f64;
        let mean = self.targets.iter().sum::<f64>() / n;
        let mut out = self.clone();
        out.targets.iter_mut().for_each(|t| *t -= mean);
        out
    }

    /// Copy with extra binary columns appended.
    pub fn with_extra_columns(&self, names: Vec<String>, columns: Vec<Vec<u8>>) -> Result<Self> {
        let mut all_names = self.feature_names.clone();
        all_names.extend(names);
        let mut all_cols = self.columns.clone();
        all_cols.extend(columns);
        Self::from_columns(self.ids.clone(), all_names, all_cols, self.targets.clone())
    }
}

/// Reads the `id,target,<fingerprint>...` CSV layout.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Header(e.to_string()))?
        .clone();
    if header.get(0) != Some("id") {
        return Err(Error::Header("first column must be `id`".into()));
    }
    if header.get(1) != Some("target") {
        return Err(Error::Header(
            "missing `target` column in second position".into(),
        ));
    }
    let feature_names: Vec<String> = header.iter().skip(2).map(str::to_owned).collect();

    let mut ids = Vec::new();
    let mut targets = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format {
            row: i,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Format {
                row: i,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        ids.push(record[0].to_owned());
        let target: f64 = record[1].parse().map_err(|_| Error::Format {
            row: i,
            column: "target".into(),
            message: format!("`{}` is not a decimal number", &record[1]),
        })?;
        targets.push(target);
        let row = record
            .iter()
            .skip(2)
            .zip(&feature_names)
            .map(|(field, name)| match field {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(Error::Format {
                    row: i,
                    column: name.clone(),
                    message: format!("fingerprint value `{other}` is not 0 or 1"),
                }),
            })
            .collect::<Result<Vec<u8>>>()?;
        rows.push(row);
    }
    Dataset::from_rows(ids, feature_names, &rows, targets)
}

/// Serializes in the same layout `load_dataset` reads.
pub fn write_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("id,target");
    for name in d.feature_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..d.n_samples() {
        out.push_str(&d.ids()[i]);
        out.push(',');
        out.push_str(&d.targets()[i].to_string());
        for j in 0..d.n_fingerprints() {
            out.push(',');
            out.push(if d.value(i, j) == 1 { '1' } else { '0' });
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
