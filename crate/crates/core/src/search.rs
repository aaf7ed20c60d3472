//! Brute-force enumeration of every fingerprint subset of size `1..=M`.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stump::{FingerprintSet, Objective, SplitScorer};

/// Candidate budget above which `full_search` refuses to run.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: FingerprintSet,
    pub objective: Objective,
    pub swmse: f64,
    pub mse: f64,
    pub candidates_evaluated: u128,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
}

pub(crate) mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    /// Rounds to the nearest nanosecond so a write-read-write cycle is exact.
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        if !(secs.is_finite() && secs >= 0.0) {
            return Err(serde::de::Error::custom(
                "duration must be a non-negative number",
            ));
        }
        Ok(Duration::from_nanos((secs * 1e9).round() as u64))
    }
}

/// `(C(n_f, m), Σ_{u=1..m} C(n_f, u))`, exact.
pub fn count_combinations(n_f: usize, m: usize) -> Result<(u128, u128)> {
    if m > n_f {
        return Err(Error::Range {
            what: "M",
            value: m,
            min: 0,
            max: n_f,
        });
    }
    let mut c: u128 = 1;
    let mut cumulative: u128 = 0;
    for k in 0..m {
        // C(n, k+1) = C(n, k)·(n−k)/(k+1), exact at every step
        c = c * (n_f - k) as u128 / (k + 1) as u128;
        cumulative += c;
    }
    Ok((c, cumulative))
}

#[derive(Debug, Clone)]
struct Best {
    score: f64,
    indices: Vec<usize>,
    evaluated: u128,
}

impl Best {
    fn empty() -> Self {
        Self {
            score: f64::INFINITY,
            indices: Vec::new(),
            evaluated: 0,
        }
    }

    /// Lower score, then fewer columns, then lexicographically smaller.
    fn beats(score: f64, indices: &[usize], other: &Best) -> bool {
        if other.indices.is_empty() {
            return true;
        }
        match score.partial_cmp(&other.score).unwrap_or(Ordering::Greater) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => (indices.len(), indices) < (other.indices.len(), &other.indices[..]),
        }
    }

    fn merge(mut self, other: Best) -> Best {
        let evaluated = self.evaluated + other.evaluated;
        if !other.indices.is_empty() && Self::beats(other.score, &other.indices, &self) {
            self = other;
        }
        self.evaluated = evaluated;
        self
    }
}

fn descend(
    scorer: &SplitScorer,
    objective: Objective,
    m: usize,
    prefix: &mut Vec<usize>,
    mask: &[u64],
    best: &mut Best,
) {
    let score = scorer.score_mask(mask, objective);
    best.evaluated += 1;
    if Best::beats(score, prefix, best) {
        best.score = score;
        best.indices.clone_from(prefix);
    }
    if prefix.len() == m {
        return;
    }
    let start = prefix.last().map_or(0, |&j| j + 1);
    let mut child = mask.to_vec();
    for j in start..scorer.n_fingerprints() {
        child.copy_from_slice(mask);
        scorer.and_column(&mut child, j);
        prefix.push(j);
        descend(scorer, objective, m, prefix, &child, best);
        prefix.pop();
    }
}

pub fn full_search(d: &Dataset, m: usize, objective: Objective) -> Result<SearchResult> {
    full_search_with_budget(d, m, objective, DEFAULT_BUDGET)
}

/// Scores every subset of size `1..=m`. Work is split by the subset's first
/// index; the merge applies the global tie-break, so the answer does not
/// depend on thread count.
pub fn full_search_with_budget(
    d: &Dataset,
    m: usize,
    objective: Objective,
    budget: u128,
) -> Result<SearchResult> {
    let n_f = d.n_fingerprints();
    if m < 1 || m > n_f {
        return Err(Error::Range {
            what: "M",
            value: m,
            min: 1,
            max: n_f,
        });
    }
    if d.n_samples() == 0 {
        return Err(Error::Degenerate("no samples"));
    }
    let (_, cumulative) = count_combinations(n_f, m)?;
    if cumulative > budget {
        return Err(Error::Budget {
            candidates: cumulative,
            budget,
        });
    }
    let started = Instant::now();
    let scorer = SplitScorer::new(d);
    let best = (0..n_f)
        .into_par_iter()
        .map(|first| {
            let mut best = Best::empty();
            let mut prefix = vec![first];
            let mask = scorer.mask(&prefix);
            descend(&scorer, objective, m, &mut prefix, &mask, &mut best);
            best
        })
        .reduce(Best::empty, Best::merge);
    let wall_time = started.elapsed();

    let best_set = FingerprintSet::new(best.indices.iter().copied(), n_f)?;
    Ok(SearchResult {
        swmse: scorer.score(best_set.indices(), Objective::Swmse),
        mse: scorer.score(best_set.indices(), Objective::Mse),
        best: best_set,
        objective,
        candidates_evaluated: best.evaluated,
        wall_time,
    })
}
