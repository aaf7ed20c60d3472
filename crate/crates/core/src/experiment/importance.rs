use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stump::{interaction_values, render_name, FingerprintSet};

pub const DEFAULT_DEPTH: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceScore {
    pub label: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    /// Which model produced the scores.
    pub model: String,
    pub depth: usize,
    /// Every column the tree could split on: base columns, then each
    /// distinct generated conjunction of two or more columns.
    pub columns: Vec<ImportanceScore>,
    /// One entry per requested fingerprint, in request order. A single-column
    /// fingerprint reports its base column's score.
    pub generated: Vec<ImportanceScore>,
}

struct Tree<'a> {
    columns: &'a [Vec<u8>],
    targets: &'a [f64],
    scores: Vec<f64>,
}

fn scatter(targets: &[f64], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let mean = rows.iter().map(|&i| targets[i]).sum::<f64>() / rows.len() as f64;
    rows.iter().map(|&i| (targets[i] - mean).powi(2)).sum()
}

impl Tree<'_> {
    fn grow(&mut self, rows: &[usize], depth_left: usize) {
        if depth_left == 0 || rows.len() < 2 {
            return;
        }
        let first = self.targets[rows[0]];
        if rows.iter().all(|&i| self.targets[i] == first) {
            return;
        }
        let parent = scatter(self.targets, rows);
        let mut best: Option<(usize, f64, Vec<usize>, Vec<usize>)> = None;
        for (j, col) in self.columns.iter().enumerate() {
            let (ones, zeros): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| col[i] == 1);
            if ones.is_empty() || zeros.is_empty() {
                continue;
            }
            let gain = parent - scatter(self.targets, &ones) - scatter(self.targets, &zeros);
            if best.as_ref().is_none_or(|b| gain > b.1) {
                best = Some((j, gain, ones, zeros));
            }
        }
        let Some((j, gain, ones, zeros)) = best else {
            return;
        };
        if gain <= 1e-12 * parent {
            return;
        }
        self.scores[j] += gain;
        self.grow(&ones, depth_left - 1);
        self.grow(&zeros, depth_left - 1);
    }
}

/// Greedy variance-reduction tree on all samples. A column's importance is
/// the total scatter removed by the nodes that split on it.
pub fn importance(
    d: &Dataset,
    generated: &[FingerprintSet],
    depth: usize,
) -> Result<ImportanceReport> {
    if depth < 1 {
        return Err(Error::InvalidParameter(
            "importance depth must be >= 1".into(),
        ));
    }
    let mut labels: Vec<String> = d.feature_names().iter().map(|n| render_name(n)).collect();
    let mut columns: Vec<Vec<u8>> = (0..d.n_fingerprints())
        .map(|j| d.column(j).to_vec())
        .collect();
    let mut extra: Vec<&FingerprintSet> = Vec::new();
    let mut slot = Vec::with_capacity(generated.len());
    for f in generated {
        let g = interaction_values(d, f)?;
        if f.u() == 1 {
            slot.push(f.indices()[0]);
        } else if let Some(k) = extra.iter().position(|e| *e == f) {
            slot.push(d.n_fingerprints() + k);
        } else {
            slot.push(columns.len());
            extra.push(f);
            labels.push(f.render(d));
            columns.push(g);
        }
    }

    let rows: Vec<usize> = (0..d.n_samples()).collect();
    let mut tree = Tree {
        columns: &columns,
        targets: d.targets(),
        scores: vec![0.0; columns.len()],
    };
    tree.grow(&rows, depth);
    let scores = tree.scores;

    Ok(ImportanceReport {
        model: format!("variance-reduction tree, max depth {depth}"),
        depth,
        generated: generated
            .iter()
            .zip(&slot)
            .map(|(f, &k)| ImportanceScore {
                label: f.render(d),
                score: scores[k],
            })
            .collect(),
        columns: labels
            .into_iter()
            .zip(scores)
            .map(|(label, score)| ImportanceScore { label, score })
            .collect(),
    })
}
