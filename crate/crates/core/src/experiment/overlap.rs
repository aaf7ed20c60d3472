use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stump::{interaction_values, FingerprintSet};

/// Pairwise share of samples on which two interaction splits agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl OverlapMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a][b]
    }
}

pub fn overlap_matrix(d: &Dataset, fps: &[FingerprintSet]) -> Result<OverlapMatrix> {
    if fps.is_empty() {
        return Err(Error::EmptyInput("overlap needs at least one fingerprint"));
    }
    if d.n_samples() == 0 {
        return Err(Error::Degenerate("no samples"));
    }
    let splits = fps
        .iter()
        .map(|f| interaction_values(d, f))
        .collect::<Result<Vec<_>>>()?;
    let n = d.n_samples() as f64;
    let k = fps.len();
    let mut values = vec![vec![1.0; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let matched = splits[a]
                .iter()
                .zip(&splits[b])
                .filter(|(x, y)| x == y)
                .count();
            let v = matched as f64 / n;
            values[a][b] = v;
            values[b][a] = v;
        }
    }
    Ok(OverlapMatrix {
        labels: fps.iter().map(|f| f.render(d)).collect(),
        values,
    })
}
