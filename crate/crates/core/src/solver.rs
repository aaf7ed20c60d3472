//! Heuristic and exact minimizers for [`Qubo`] models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::qubo::{Assignment, Qubo, QuboModel};
use crate::stump::{FingerprintSet, Objective, SplitScorer};

/// Largest model `exhaustive_solve` accepts.
pub const EXHAUSTIVE_LIMIT: usize = 24;

/// Default Metropolis sweeps per restart for [`simulated_anneal`].
pub const DEFAULT_SWEEPS: usize = 5000;

/// Default sweeps for [`anneal_feasible`]; each sweep is `N_F` proposals.
pub const DEFAULT_FEASIBLE_SWEEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl AnnealSchedule {
    /// Defaults derived from the model: start hot relative to the target
    /// variance, end cold enough that a move paying one unit of the smallest
    /// constraint penalty is accepted with probability below `1e-6`.
    pub fn for_model(model: &QuboModel, sweeps: usize, restarts: usize, seed: u64) -> Self {
        let n = model.layout.n_s.max(1) as f64;
        let w = model.weights;
        let smallest_penalty = [w.lambda1 / n, w.lambda2 / n, w.lambda3]
            .into_iter()
            .filter(|v| *v > 0.0)
            .fold(f64::INFINITY, f64::min);
        let beta_start = 0.01 / model.target_scale;
        let beta_end = if smallest_penalty.is_finite() {
            (1e6f64.ln() / smallest_penalty).max(beta_start)
        } else {
            beta_start * 1e4
        };
        Self {
            sweeps,
            beta_start,
            beta_end,
            restarts,
            seed,
        }
    }

    /// Schedule for [`anneal_feasible`], whose energies are SWMSE values in
    /// `[0, Var(t)]`: starts where a `+Var(t)` move passes with probability
    /// `1/e` and ends where a `+10⁻³·Var(t)` move passes below `1e-6`.
    pub fn for_feasible(model: &QuboModel, sweeps: usize, restarts: usize, seed: u64) -> Self {
        Self {
            sweeps,
            beta_start: 1.0 / model.target_scale,
            beta_end: 1e6f64.ln() / (1e-3 * model.target_scale),
            restarts,
            seed,
        }
    }

    /// Schedule for an arbitrary QUBO, scaled by its largest coefficient.
    pub fn for_qubo(q: &Qubo, sweeps: usize, restarts: usize, seed: u64) -> Self {
        let scale = q.coefficient_scale().max(f64::MIN_POSITIVE);
        Self {
            sweeps,
            beta_start: 0.1 / scale,
            beta_end: 20.0 / scale,
            restarts,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        if !(self.beta_start > 0.0 && self.beta_start <= self.beta_end && self.beta_end.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "need 0 < beta_start <= beta_end, got {} and {}",
                self.beta_start, self.beta_end
            )));
        }
        Ok(())
    }

    fn beta_at(&self, sweep: usize) -> f64 {
        if self.sweeps <= 1 {
            return self.beta_end;
        }
        let frac = sweep as f64 / (self.sweeps - 1) as f64;
        self.beta_start * (self.beta_end / self.beta_start).powf(frac)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub assignment: Assignment,
    pub energy: f64,
}

/// Neighbor lists in CSR form.
#[derive(Debug, Clone)]
struct Adjacency {
    start: Vec<usize>,
    neighbors: Vec<(usize, f64)>,
}

impl Adjacency {
    fn new(q: &Qubo) -> Self {
        let n = q.n_vars();
        let mut degree = vec![0usize; n];
        for &(l, m, _) in q.quadratic() {
            degree[l] += 1;
            degree[m] += 1;
        }
        let mut start = vec![0usize; n + 1];
        for k in 0..n {
            start[k + 1] = start[k] + degree[k];
        }
        let mut fill = start.clone();
        let mut neighbors = vec![(0usize, 0.0f64); start[n]];
        for &(l, m, v) in q.quadratic() {
            neighbors[fill[l]] = (m, v);
            fill[l] += 1;
            neighbors[fill[m]] = (l, v);
            fill[m] += 1;
        }
        Self { start, neighbors }
    }

    fn of(&self, k: usize) -> &[(usize, f64)] {
        &self.neighbors[self.start[k]..self.start[k + 1]]
    }
}

/// Assignment plus cached local fields `h_k = b_k + Σ_j Q_kj θ_j`, so the
/// energy change of flipping `k` is `±h_k`.
struct State<'a> {
    adj: &'a Adjacency,
    bits: Vec<u8>,
    field: Vec<f64>,
    energy: f64,
}

impl<'a> State<'a> {
    fn new(q: &Qubo, adj: &'a Adjacency, bits: Vec<u8>) -> Self {
        let mut field = q.linear().to_vec();
        for &(l, m, v) in q.quadratic() {
            if bits[m] == 1 {
                field[l] += v;
            }
            if bits[l] == 1 {
                field[m] += v;
            }
        }
        let energy = q.energy(&bits).expect("length checked by caller");
        Self {
            adj,
            bits,
            field,
            energy,
        }
    }

    fn delta(&self, k: usize) -> f64 {
        if self.bits[k] == 0 {
            self.field[k]
        } else {
            -self.field[k]
        }
    }

    fn flip(&mut self, k: usize) {
        let d = self.delta(k);
        let sign = if self.bits[k] == 0 { 1.0 } else { -1.0 };
        self.bits[k] ^= 1;
        self.energy += d;
        for &(j, v) in self.adj.of(k) {
            self.field[j] += sign * v;
        }
    }
}

fn anneal_restart(q: &Qubo, adj: &Adjacency, s: &AnnealSchedule, restart: usize) -> Solution {
    let n = q.n_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_add(restart as u64));
    let init: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1u8)).collect();
    let mut state = State::new(q, adj, init);
    let mut best = state.bits.clone();
    let mut best_energy = state.energy;
    if n == 0 {
        return Solution {
            assignment: Assignment { bits: best },
            energy: best_energy,
        };
    }
    for sweep in 0..s.sweeps {
        let beta = s.beta_at(sweep);
        for _ in 0..n {
            let k = rng.gen_range(0..n);
            let d = state.delta(k);
            if d <= 0.0 || rng.gen::<f64>() < (-beta * d).exp() {
                state.flip(k);
            }
        }
        if state.energy < best_energy {
            best_energy = state.energy;
            best.copy_from_slice(&state.bits);
        }
    }
    let energy = q.energy(&best).expect("length matches");
    Solution {
        assignment: Assignment { bits: best },
        energy,
    }
}

/// Metropolis annealing on random single-bit flips with a geometric
/// inverse-temperature ramp. Restarts run in parallel; restart `r` draws from
/// a ChaCha stream seeded with `seed + r`, and the result is the lowest energy
/// seen at any sweep boundary (ties go to the lower restart index).
pub fn simulated_anneal(q: &Qubo, s: &AnnealSchedule) -> Result<Solution> {
    s.validate()?;
    let adj = Adjacency::new(q);
    let results: Vec<Solution> = (0..s.restarts)
        .into_par_iter()
        .map(|r| anneal_restart(q, &adj, s, r))
        .collect();
    Ok(results
        .into_iter()
        .reduce(|best, next| {
            if next.energy < best.energy {
                next
            } else {
                best
            }
        })
        .expect("restarts >= 1"))
}

fn anneal_feasible_restart(
    scorer: &SplitScorer,
    m: usize,
    s: &AnnealSchedule,
    restart: usize,
) -> (Vec<usize>, f64) {
    let n_f = scorer.n_fingerprints();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_add(restart as u64));
    let u0 = rng.gen_range(1..=m);
    let mut current = rand::seq::index::sample(&mut rng, n_f, u0).into_vec();
    current.sort_unstable();
    let mut mask = scorer.mask(&current);
    let mut energy = scorer.score_mask(&mask, Objective::Swmse);
    let mut best = (current.clone(), energy);
    let mut proposal = Vec::with_capacity(m + 1);
    let mut proposal_mask = mask.clone();
    for sweep in 0..s.sweeps {
        let beta = s.beta_at(sweep);
        for _ in 0..n_f {
            let j = rng.gen_range(0..n_f);
            let swap = rng.gen_bool(0.5);
            proposal.clone_from(&current);
            match current.binary_search(&j) {
                Ok(pos) if swap || current.len() == 1 => {
                    if n_f == current.len() {
                        continue;
                    }
                    let k = loop {
                        let k = rng.gen_range(0..n_f);
                        if current.binary_search(&k).is_err() {
                            break k;
                        }
                    };
                    proposal.remove(pos);
                    proposal.push(k);
                }
                Ok(pos) => {
                    proposal.remove(pos);
                }
                Err(_) if swap || current.len() == m => {
                    let pos = rng.gen_range(0..current.len());
                    proposal.remove(pos);
                    proposal.push(j);
                }
                Err(pos) => proposal.insert(pos, j),
            }
            if proposal.len() > current.len() {
                // additions only narrow the current split
                proposal_mask.copy_from_slice(&mask);
                scorer.and_column(&mut proposal_mask, j);
            } else {
                proposal.sort_unstable();
                scorer.mask_into(&mut proposal_mask, &proposal);
            }
            let e = scorer.score_mask(&proposal_mask, Objective::Swmse);
            let d = e - energy;
            if d <= 0.0 || rng.gen::<f64>() < (-beta * d).exp() {
                std::mem::swap(&mut current, &mut proposal);
                std::mem::swap(&mut mask, &mut proposal_mask);
                energy = e;
                if energy < best.1 {
                    best = (current.clone(), energy);
                }
            }
        }
    }
    best
}

/// Annealing restricted to constraint-satisfying assignments of a
/// fingerprint model.
///
/// Every visited state is [`Assignment::encode`] of some fingerprint set with
/// `1 <= U <= M`: θ_X and θ_U sit on their unique zero-penalty values, so the
/// QUBO energy reduces to the SWMSE of the encoded split. Moves add, remove
/// or swap one selected column and re-encode the auxiliary blocks as a
/// unit, which single-bit flips cannot do without crossing a penalty barrier
/// of order `N_S·λ₁`. A sweep is `N_F` proposals.
///
/// The reported energy is the SWMSE of the returned split, which equals
/// `model.energy(&assignment)` up to rounding.
pub fn anneal_feasible(d: &Dataset, model: &QuboModel, s: &AnnealSchedule) -> Result<Solution> {
    s.validate()?;
    let layout = model.layout;
    if d.n_samples() != layout.n_s || d.n_fingerprints() != layout.n_f {
        return Err(Error::Shape {
            expected: layout.n_s,
            actual: d.n_samples(),
        });
    }
    let scorer = SplitScorer::new(d);
    let results: Vec<(Vec<usize>, f64)> = (0..s.restarts)
        .into_par_iter()
        .map(|r| anneal_feasible_restart(&scorer, layout.m, s, r))
        .collect();
    let (best, energy) = results
        .into_iter()
        .reduce(|best, next| if next.1 < best.1 { next } else { best })
        .expect("restarts >= 1");
    let f = FingerprintSet::new(best, layout.n_f)?;
    let assignment = Assignment::encode(d, &f, &layout)?;
    Ok(Solution { assignment, energy })
}

/// Steepest-descent single-bit flips down to a 1-flip local optimum.
pub fn refine_local(q: &Qubo, a: &Assignment) -> Result<Assignment> {
    if a.len() != q.n_vars() {
        return Err(Error::Shape {
            expected: q.n_vars(),
            actual: a.len(),
        });
    }
    let adj = Adjacency::new(q);
    let mut state = State::new(q, &adj, a.bits.clone());
    let tol = 1e-12 * q.coefficient_scale().max(1.0);
    loop {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..q.n_vars() {
            let d = state.delta(k);
            if d < -tol && best.is_none_or(|(_, b)| d < b) {
                best = Some((k, d));
            }
        }
        match best {
            Some((k, _)) => state.flip(k),
            None => break,
        }
    }
    Ok(Assignment { bits: state.bits })
}

/// Global minimum by Gray-code enumeration. Energies within a relative
/// `1e-12` count as ties and resolve to the lexicographically smallest bit
/// vector.
pub fn exhaustive_solve(q: &Qubo) -> Result<Solution> {
    let n = q.n_vars();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            total: n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let adj = Adjacency::new(q);
    let mut state = State::new(q, &adj, vec![0; n]);
    let tol = 1e-12 * (q.coefficient_scale() * (n + 1) as f64).max(1.0);
    let mut best = state.bits.clone();
    let mut best_energy = state.energy;
    for step in 1u64..(1u64 << n) {
        state.flip(step.trailing_zeros() as usize);
        let e = state.energy;
        if e < best_energy - tol || (e <= best_energy + tol && state.bits < best) {
            best_energy = best_energy.min(e);
            best.copy_from_slice(&state.bits);
        }
    }
    let energy = q.energy(&best)?;
    Ok(Solution {
        assignment: Assignment { bits: best },
        energy,
    })
}
