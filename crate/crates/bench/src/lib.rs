//! Synthetic datasets shared by the benchmarks.

use qubofp::{Dataset, FingerprintSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n_base` Bernoulli(0.5) columns plus complements; the target is 2 where
/// the first three base columns are all set, plus uniform noise in `±0.5`.
pub fn planted(n_s: usize, n_base: usize, seed: u64) -> (Dataset, FingerprintSet) {
    assert!(n_base >= 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns: Vec<Vec<u8>> = (0..n_base)
        .map(|_| (0..n_s).map(|_| rng.gen_range(0..=1u8)).collect())
        .collect();
    let targets = (0..n_s)
        .map(|i| {
            let g = (0..3).all(|j| columns[j][i] == 1);
            2.0 * f64::from(u8::from(g)) + rng.gen_range(-0.5..0.5)
        })
        .collect();
    let d = Dataset::from_columns(
        (0..n_s).map(|i| format!("s{i}")).collect(),
        (0..n_base).map(|j| format!("K{j}")).collect(),
        columns,
        targets,
    )
    .expect("well-formed synthetic data")
    .augment_complements()
    .expect("no complement names yet");
    let f = FingerprintSet::new([0, 1, 2], d.n_fingerprints()).expect("indices in range");
    (d, f)
}
