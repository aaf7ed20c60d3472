use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EvalSet, ImportanceReport, OverlapMatrix, SolverKind, TrialConfig, TrialResult};
use crate::error::{Error, Result};

pub const REPORT_JSON: &str = "report.json";
pub const TRIALS_CSV: &str = "effective_trials.csv";
pub const FINGERPRINTS_CSV: &str = "fingerprints.csv";

/// Run settings echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub dataset: Option<String>,
    pub n_samples: Vec<usize>,
    pub m: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub sweeps: Option<usize>,
    pub restarts: usize,
    pub penalty_scale: f64,
    pub solver: SolverKind,
    pub eval_set: EvalSet,
}

impl ReportConfig {
    pub fn new(base: &TrialConfig, n_samples: &[usize], m: &[usize]) -> Self {
        Self {
            dataset: None,
            n_samples: n_samples.to_vec(),
            m: m.to_vec(),
            trials: base.trials,
            seed: base.seed,
            sweeps: base.sweeps,
            restarts: base.restarts,
            penalty_scale: base.penalty_scale,
            solver: base.solver,
            eval_set: base.eval_set,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ReportConfig,
    pub trials: Vec<TrialResult>,
    pub overlap: OverlapMatrix,
    pub importance: Option<ImportanceReport>,
    /// Effective trial count per `"<n_samples>,<m>"` cell.
    pub effective_counts: BTreeMap<String, usize>,
}

impl Report {
    pub fn new(
        config: ReportConfig,
        trials: Vec<TrialResult>,
        overlap: Option<OverlapMatrix>,
        importance: Option<ImportanceReport>,
    ) -> Self {
        let effective_counts = effective_counts(&trials)
            .into_iter()
            .map(|((n, m), c)| (format!("{n},{m}"), c))
            .collect();
        Self {
            config,
            trials,
            overlap: overlap.unwrap_or(OverlapMatrix {
                labels: Vec::new(),
                values: Vec::new(),
            }),
            importance,
            effective_counts,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per distinct `(N_S, M, fingerprint)` among effective trials,
    /// in trial order.
    pub fn fingerprint_rows(&self) -> Vec<TableRow> {
        let scores: BTreeMap<&str, f64> = self
            .importance
            .iter()
            .flat_map(|r| &r.generated)
            .map(|s| (s.label.as_str(), s.score))
            .collect();
        let mut seen = BTreeSet::new();
        let mut rows = Vec::new();
        for t in self.trials.iter().filter(|t| t.effective) {
            if !seen.insert((t.n_samples, t.m, t.fingerprint_string.as_str())) {
                continue;
            }
            rows.push(TableRow {
                id: rows.len() + 1,
                n_samples: t.n_samples,
                m: t.m,
                u: t.u,
                importance: scores.get(t.fingerprint_string.as_str()).copied(),
                fingerprint: t.fingerprint_string.clone(),
            });
        }
        rows
    }

    pub fn fingerprints_csv(&self) -> String {
        let mut out = String::from("ID,N_S,M,U,I,fingerprint\n");
        for r in self.fingerprint_rows() {
            let i = r.importance.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.id,
                r.n_samples,
                r.m,
                r.u,
                i,
                csv_field(&r.fingerprint)
            );
        }
        out
    }

    /// Rows are `N_S`, columns are `M`; cells that were not run are blank.
    pub fn effective_trials_csv(&self) -> String {
        let counts = effective_counts(&self.trials);
        let ns: BTreeSet<usize> = counts.keys().map(|k| k.0).collect();
        let ms: BTreeSet<usize> = counts.keys().map(|k| k.1).collect();
        let mut out = String::from("N_S");
        for m in &ms {
            let _ = write!(out, ",M={m}");
        }
        out.push('\n');
        for n in &ns {
            let _ = write!(out, "{n}");
            for m in &ms {
                match counts.get(&(*n, *m)) {
                    Some(c) => {
                        let _ = write!(out, ",{c}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub id: usize,
    pub n_samples: usize,
    pub m: usize,
    pub u: usize,
    pub importance: Option<f64>,
    pub fingerprint: String,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Effective trials per `(N_S, M)`; every cell that has trials is present,
/// including those with zero effective trials.
pub fn effective_counts(trials: &[TrialResult]) -> BTreeMap<(usize, usize), usize> {
    let mut counts = BTreeMap::new();
    for t in trials {
        *counts.entry((t.n_samples, t.m)).or_insert(0) += usize::from(t.effective);
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub json: PathBuf,
    pub fingerprints: PathBuf,
    pub effective_trials: PathBuf,
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the JSON report and both CSV tables into `dir`, creating it if
/// needed.
pub fn emit_report(report: &Report, dir: impl AsRef<Path>) -> Result<ReportPaths> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = ReportPaths {
        json: dir.join(REPORT_JSON),
        fingerprints: dir.join(FINGERPRINTS_CSV),
        effective_trials: dir.join(TRIALS_CSV),
    };
    write(&paths.json, &report.to_json()?)?;
    write(&paths.fingerprints, &report.fingerprints_csv())?;
    write(&paths.effective_trials, &report.effective_trials_csv())?;
    Ok(paths)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Report> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
