//! Depth-1 splits on interaction fingerprints.
//!
//! An interaction fingerprint is the product (logical AND) of the selected
//! base columns. A sample lands in group 1 when it carries every selected
//! column and in group 0 otherwise; each group predicts its mean target.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, COMPLEMENT_PREFIX};
use crate::error::{Error, Result};

/// Sorted, duplicate-free set of column indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FingerprintSet {
    selected: Vec<usize>,
}

impl FingerprintSet {
    pub fn new(indices: impl IntoIterator<Item = usize>, n_fingerprints: usize) -> Result<Self> {
        let mut selected: Vec<usize> = indices.into_iter().collect();
        selected.sort_unstable();
        selected.dedup();
        if let Some(&bad) = selected.iter().find(|&&j| j >= n_fingerprints) {
            return Err(Error::InvalidIndex {
                index: bad,
                n_fingerprints,
            });
        }
        Ok(Self { selected })
    }

    /// Looks columns up by name.
    pub fn from_names<S: AsRef<str>>(d: &Dataset, names: &[S]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| {
                d.index_of(n.as_ref()).ok_or_else(|| {
                    Error::InvalidParameter(format!("unknown fingerprint `{}`", n.as_ref()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(idx, d.n_fingerprints())
    }

    pub fn single(j: usize) -> Self {
        Self { selected: vec![j] }
    }

    pub fn indices(&self) -> &[usize] {
        &self.selected
    }

    /// Number of producted fingerprints.
    pub fn u(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.selected.binary_search(&j).is_ok()
    }

    pub fn with(&self, j: usize) -> Self {
        let mut next = self.clone();
        if let Err(pos) = next.selected.binary_search(&j) {
            next.selected.insert(pos, j);
        }
        next
    }

    /// Conjunction string, e.g. `RING∧¬QCH3`.
    pub fn render(&self, d: &Dataset) -> String {
        self.selected
            .iter()
            .map(|&j| render_name(&d.feature_names()[j]))
            .collect::<Vec<_>>()
            .join("∧")
    }
}

pub fn render_name(name: &str) -> String {
    match name.strip_prefix(COMPLEMENT_PREFIX) {
        Some(base) => format!("¬{base}"),
        None => name.to_owned(),
    }
}

/// `g_i = ∏_{j ∈ f} X_{i,j}`.
pub fn interaction_values(d: &Dataset, f: &FingerprintSet) -> Result<Vec<u8>> {
    let (first, rest) = f.indices().split_first().ok_or(Error::EmptySelection)?;
    if let Some(&bad) = f.indices().iter().find(|&&j| j >= d.n_fingerprints()) {
        return Err(Error::InvalidIndex {
            index: bad,
            n_fingerprints: d.n_fingerprints(),
        });
    }
    let mut g = d.column(*first).to_vec();
    for &j in rest {
        for (gi, &x) in g.iter_mut().zip(d.column(j)) {
            *gi &= x;
        }
    }
    Ok(g)
}

/// Counts and first two moments of the targets in each group.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SplitStats {
    pub n1: usize,
    pub n0: usize,
    pub sum1: f64,
    pub sum0: f64,
    pub sumsq1: f64,
    pub sumsq0: f64,
}

impl SplitStats {
    pub fn n_total(&self) -> usize {
        self.n1 + self.n0
    }

    pub fn mean1(&self) -> Option<f64> {
        (self.n1 > 0).then(|| self.sum1 / self.n1 as f64)
    }

    pub fn mean0(&self) -> Option<f64> {
        (self.n0 > 0).then(|| self.sum0 / self.n0 as f64)
    }

    /// `n_b · Var_b`, the within-group sum of squared deviations.
    fn scatter(n: usize, sum: f64, sumsq: f64) -> f64 {
        if n == 0 {
            0.0
        } else {
            (sumsq - sum * sum / n as f64).max(0.0)
        }
    }

    pub fn scatter1(&self) -> f64 {
        Self::scatter(self.n1, self.sum1, self.sumsq1)
    }

    pub fn scatter0(&self) -> f64 {
        Self::scatter(self.n0, self.sum0, self.sumsq0)
    }
}

pub fn split_stats(targets: &[f64], g: &[u8]) -> Result<SplitStats> {
    if targets.len() != g.len() {
        return Err(Error::Shape {
            expected: targets.len(),
            actual: g.len(),
        });
    }
    let mut s = SplitStats::default();
    for (&t, &gi) in targets.iter().zip(g) {
        if gi == 1 {
            s.n1 += 1;
            s.sum1 += t;
            s.sumsq1 += t * t;
        } else {
            s.n0 += 1;
            s.sum0 += t;
            s.sumsq0 += t * t;
        }
    }
    Ok(s)
}

fn check_total(s: &SplitStats, n_total: usize) -> Result<f64> {
    if n_total == 0 {
        return Err(Error::Degenerate("no samples"));
    }
    if s.n_total() != n_total {
        return Err(Error::Shape {
            expected: n_total,
            actual: s.n_total(),
        });
    }
    Ok(n_total as f64)
}

/// Stump MSE: `Σ_b Var_b · n_b / N`. Empty groups contribute 0.
pub fn mse(s: &SplitStats, n_total: usize) -> Result<f64> {
    let n = check_total(s, n_total)?;
    Ok((s.scatter1() + s.scatter0()) / n)
}

/// Square-weighted MSE: `Σ_b Var_b · (n_b / N)²`, equivalently
/// `Σ_b (n_b·sumsq_b − sum_b²) / N²`. Empty groups contribute 0.
pub fn swmse(s: &SplitStats, n_total: usize) -> Result<f64> {
    let n = check_total(s, n_total)?;
    // group shares first, so a one-group split reproduces `mse` bit for bit
    let w1 = s.n1 as f64 / n;
    let w0 = s.n0 as f64 / n;
    Ok((w1 * s.scatter1() + w0 * s.scatter0()) / n)
}

/// Which loss a split is scored with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    #[default]
    Swmse,
    Mse,
}

impl Objective {
    pub fn score(self, s: &SplitStats, n_total: usize) -> Result<f64> {
        match self {
            Objective::Swmse => swmse(s, n_total),
            Objective::Mse => mse(s, n_total),
        }
    }
}

/// Evaluates `objective` for the split induced by `f`.
pub fn score_fingerprint(d: &Dataset, f: &FingerprintSet, objective: Objective) -> Result<f64> {
    let g = interaction_values(d, f)?;
    let s = split_stats(d.targets(), &g)?;
    objective.score(&s, d.n_samples())
}

/// Bit-packed columns for scoring many candidate fingerprints against one
/// dataset.
#[derive(Debug, Clone)]
pub struct SplitScorer {
    n_samples: usize,
    words: usize,
    columns: Vec<Vec<u64>>,
    targets: Vec<f64>,
    total_sum: f64,
    total_sumsq: f64,
}

impl SplitScorer {
    pub fn new(d: &Dataset) -> Self {
        let n = d.n_samples();
        let words = n.div_ceil(64);
        let columns = (0..d.n_fingerprints())
            .map(|j| {
                let mut packed = vec![0u64; words];
                for (i, &v) in d.column(j).iter().enumerate() {
                    if v == 1 {
                        packed[i / 64] |= 1 << (i % 64);
                    }
                }
                packed
            })
            .collect();
        let targets = d.targets().to_vec();
        Self {
            n_samples: n,
            words,
            columns,
            total_sum: targets.iter().sum(),
            total_sumsq: targets.iter().map(|t| t * t).sum(),
            targets,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_fingerprints(&self) -> usize {
        self.columns.len()
    }

    /// Packed interaction vector for `indices` (all ones when empty).
    pub fn mask(&self, indices: &[usize]) -> Vec<u64> {
        let mut mask = vec![0u64; self.words];
        self.mask_into(&mut mask, indices);
        mask
    }

    /// Writes the packed interaction vector into `mask` (length must match).
    pub fn mask_into(&self, mask: &mut [u64], indices: &[usize]) {
        match indices.split_first() {
            Some((&first, rest)) => {
                mask.copy_from_slice(&self.columns[first]);
                for &j in rest {
                    self.and_column(mask, j);
                }
            }
            None => {
                mask.fill(!0u64);
                if let Some(last) = mask.last_mut() {
                    let rem = self.n_samples % 64;
                    if rem != 0 {
                        *last = (1u64 << rem) - 1;
                    }
                }
            }
        }
    }

    pub fn and_column(&self, mask: &mut [u64], j: usize) {
        for (m, c) in mask.iter_mut().zip(&self.columns[j]) {
            *m &= c;
        }
    }

    pub fn stats(&self, mask: &[u64]) -> SplitStats {
        let mut s = SplitStats::default();
        for (w, &bits) in mask.iter().enumerate() {
            let mut bits = bits;
            while bits != 0 {
                let i = w * 64 + bits.trailing_zeros() as usize;
                let t = self.targets[i];
                s.n1 += 1;
                s.sum1 += t;
                s.sumsq1 += t * t;
                bits &= bits - 1;
            }
        }
        s.n0 = self.n_samples - s.n1;
        s.sum0 = self.total_sum - s.sum1;
        s.sumsq0 = self.total_sumsq - s.sumsq1;
        s
    }

    pub fn score_mask(&self, mask: &[u64], objective: Objective) -> f64 {
        objective
            .score(&self.stats(mask), self.n_samples)
            .expect("scorer always has samples")
    }

    pub fn score(&self, indices: &[usize], objective: Objective) -> f64 {
        self.score_mask(&self.mask(indices), objective)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StumpModel {
    pub fingerprint: FingerprintSet,
    pub pred1: f64,
    pub pred0: f64,
}

impl StumpModel {
    /// Group means; an empty group falls back to the overall mean.
    pub fn fit(d: &Dataset, fingerprint: FingerprintSet) -> Result<Self> {
        let g = interaction_values(d, &fingerprint)?;
        let s = split_stats(d.targets(), &g)?;
        if s.n_total() == 0 {
            return Err(Error::Degenerate("no samples"));
        }
        let overall = (s.sum1 + s.sum0) / s.n_total() as f64;
        Ok(Self {
            fingerprint,
            pred1: s.mean1().unwrap_or(overall),
            pred0: s.mean0().unwrap_or(overall),
        })
    }

    pub fn predict(&self, d: &Dataset) -> Result<Vec<f64>> {
        Ok(interaction_values(d, &self.fingerprint)?
            .into_iter()
            .map(|g| if g == 1 { self.pred1 } else { self.pred0 })
            .collect())
    }
}

/// Single column with the lowest stump MSE; ties go to the lowest index.
pub fn best_single_baseline(d: &Dataset) -> Result<(usize, f64)> {
    if d.n_fingerprints() == 0 {
        return Err(Error::Degenerate("dataset has no fingerprint columns"));
    }
    if d.n_samples() < 2 {
        return Err(Error::Degenerate("baseline needs at least two samples"));
    }
    let mut best: Option<(usize, f64)> = None;
    for j in 0..d.n_fingerprints() {
        let s = split_stats(d.targets(), d.column(j))?;
        let e = mse(&s, d.n_samples())?;
        if best.is_none_or(|(_, b)| e < b) {
            best = Some((j, e));
        }
    }
    Ok(best.expect("at least one column"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(columns: Vec<Vec<u8>>, targets: Vec<f64>) -> Dataset {
        let n = targets.len();
        let names = (0..columns.len()).map(|j| format!("c{j}")).collect();
        let ids = (0..n).map(|i| i.to_string()).collect();
        Dataset::from_columns(ids, names, columns, targets).unwrap()
    }

    #[test]
    fn single_factor_is_the_column() {
        let d = ds(vec![vec![1, 0, 1], vec![1, 1, 0]], vec![0.0; 3]);
        let g = interaction_values(&d, &FingerprintSet::single(1)).unwrap();
        assert_eq!(g, d.column(1));
    }

    #[test]
    fn hydroxy_ring_no_nitrogen() {
        // columns OH, RING, N and their complements
        let base = Dataset::from_rows(
            vec!["ethanol-ring".into(), "amine".into()],
            vec!["OH".into(), "RING".into(), "N".into()],
            &[vec![1, 1, 0], vec![1, 1, 1]],
            vec![0.0, 1.0],
        )
        .unwrap()
        .augment_complements()
        .unwrap();
        let f = FingerprintSet::from_names(&base, &["OH", "RING", "NOT_N"]).unwrap();
        assert_eq!(interaction_values(&base, &f).unwrap(), vec![1, 0]);
        assert_eq!(f.render(&base), "OH∧RING∧¬N");
    }

    #[test]
    fn contradiction_is_all_zero() {
        let d = ds(vec![vec![1, 0, 1, 1]], vec![0.0; 4])
            .augment_complements()
            .unwrap();
        let f = FingerprintSet::new([0, 1], 2).unwrap();
        assert_eq!(interaction_values(&d, &f).unwrap(), vec![0; 4]);
    }

    #[test]
    fn empty_selection_rejected() {
        let d = ds(vec![vec![1]], vec![0.0]);
        let f = FingerprintSet::new([], 1).unwrap();
        assert!(matches!(
            interaction_values(&d, &f),
            Err(Error::EmptySelection)
        ));
        assert!(FingerprintSet::new([3], 1).is_err());
    }

    #[test]
    fn split_stats_counts() {
        let s = split_stats(&[0.0, 0.0, 2.0, 2.0], &[1, 1, 0, 0]).unwrap();
        assert_eq!((s.n1, s.n0), (2, 2));
        assert_eq!((s.sum1, s.sum0, s.sumsq1, s.sumsq0), (0.0, 4.0, 0.0, 8.0));
        let s = split_stats(&[0.0, 0.0, 2.0, 2.0], &[1, 1, 1, 1]).unwrap();
        assert_eq!((s.n0, s.sum0, s.sumsq0), (0, 0.0, 0.0));
        assert!(matches!(
            split_stats(&[0.0], &[1, 0]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn mse_and_swmse_examples() {
        let t = [0.0, 0.0, 2.0, 2.0];
        let perfect = split_stats(&t, &[1, 1, 0, 0]).unwrap();
        let whole = split_stats(&t, &[1, 1, 1, 1]).unwrap();
        let mixed = split_stats(&[0.0, 2.0, 0.0, 2.0], &[1, 1, 0, 0]).unwrap();
        assert_eq!(mse(&perfect, 4).unwrap(), 0.0);
        assert_eq!(mse(&whole, 4).unwrap(), 1.0);
        assert_eq!(mse(&mixed, 4).unwrap(), 1.0);
        assert_eq!(swmse(&perfect, 4).unwrap(), 0.0);
        assert_eq!(swmse(&whole, 4).unwrap(), 1.0);
        assert_eq!(swmse(&mixed, 4).unwrap(), 0.5);
        assert!(matches!(
            mse(&SplitStats::default(), 0),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(swmse(&perfect, 5), Err(Error::Shape { .. })));
    }

    #[test]
    fn baseline_prefers_lowest_index_on_ties() {
        let d = ds(
            vec![vec![1, 0, 1, 0], vec![1, 1, 0, 0], vec![1, 1, 0, 0]],
            vec![0.0, 0.0, 2.0, 2.0],
        );
        assert_eq!(best_single_baseline(&d).unwrap(), (1, 0.0));
        let tiny = ds(vec![vec![1]], vec![3.0]);
        assert!(matches!(
            best_single_baseline(&tiny),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn scorer_matches_unpacked_path() {
        let cols: Vec<Vec<u8>> = (0..3)
            .map(|j| (0..70).map(|i| ((i * (j + 3) + j) % 5 < 3) as u8).collect())
            .collect();
        let t: Vec<f64> = (0..70).map(|i| (i as f64 * 0.37).sin()).collect();
        let d = ds(cols, t);
        let scorer = SplitScorer::new(&d);
        for f in [vec![0], vec![1, 2], vec![0, 1, 2]] {
            let fs = FingerprintSet::new(f.clone(), 3).unwrap();
            let g = interaction_values(&d, &fs).unwrap();
            let s = split_stats(d.targets(), &g).unwrap();
            let packed = scorer.stats(&scorer.mask(&f));
            assert_eq!((packed.n1, packed.n0), (s.n1, s.n0));
            assert!((packed.sum1 - s.sum1).abs() < 1e-12);
            assert!((scorer.score(&f, Objective::Mse) - mse(&s, 70).unwrap()).abs() < 1e-12);
        }
        assert_eq!(scorer.stats(&scorer.mask(&[])).n1, 70);
    }

    #[test]
    fn stump_predicts_group_means() {
        let d = ds(vec![vec![1, 1, 0, 0]], vec![1.0, 3.0, 5.0, 7.0]);
        let m = StumpModel::fit(&d, FingerprintSet::single(0)).unwrap();
        assert_eq!((m.pred1, m.pred0), (2.0, 6.0));
        assert_eq!(m.predict(&d).unwrap(), vec![2.0, 2.0, 6.0, 6.0]);
    }
}
