#![allow(dead_code)]

use qubofp::{Dataset, FingerprintSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("K{j}")).collect()
}

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("m{i}")).collect()
}

/// Bernoulli(0.5) columns with standard normal targets.
pub fn random_dataset(rng: &mut ChaCha8Rng, n_s: usize, n_f: usize) -> Dataset {
    let columns = (0..n_f)
        .map(|_| (0..n_s).map(|_| rng.gen_range(0..=1u8)).collect())
        .collect();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let targets = (0..n_s).map(|_| normal.sample(rng)).collect();
    Dataset::from_columns(ids(n_s), names(n_f), columns, targets).unwrap()
}

/// `n_base` random columns plus their complements, with
/// `t = 2·g* + N(0, sigma²)` where `g*` is the AND of `planted` base columns.
pub fn planted_dataset(
    seed: u64,
    n_base: usize,
    n_s: usize,
    planted: &[usize],
    sigma: f64,
) -> (Dataset, FingerprintSet) {
    let mut rng = rng(seed);
    let columns: Vec<Vec<u8>> = (0..n_base)
        .map(|_| (0..n_s).map(|_| rng.gen_range(0..=1u8)).collect())
        .collect();
    let noise = Normal::new(0.0, sigma).unwrap();
    let targets = (0..n_s)
        .map(|i| {
            let g = planted.iter().all(|&j| columns[j][i] == 1);
            2.0 * f64::from(u8::from(g)) + noise.sample(&mut rng)
        })
        .collect();
    let d = Dataset::from_columns(ids(n_s), names(n_base), columns, targets)
        .unwrap()
        .augment_complements()
        .unwrap();
    let f = FingerprintSet::new(planted.iter().copied(), d.n_fingerprints()).unwrap();
    (d, f)
}

/// Every subset of `0..n` with size in `1..=m`, in lexicographic order.
pub fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == m {
            return;
        }
        for j in start..n {
            cur.push(j);
            rec(j + 1, n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, m, &mut Vec::new(), &mut out);
    out
}

pub fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(scale)
}
