//! Trial protocol: subsample, compile, anneal, decode, and judge whether the
//! generated interaction fingerprint beats every single base fingerprint.

mod importance;
mod overlap;
mod report;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::qubo::{build_qubo, check_constraints, DecodedSolution, PenaltyWeights, QuboModel};
use crate::search::duration_secs;
use crate::solver::{
    anneal_feasible, refine_local, simulated_anneal, AnnealSchedule, DEFAULT_FEASIBLE_SWEEPS,
    DEFAULT_SWEEPS,
};
use crate::stump::{self, best_single_baseline, FingerprintSet, Objective};

pub use importance::{importance, ImportanceReport, ImportanceScore, DEFAULT_DEPTH};
pub use overlap::{overlap_matrix, OverlapMatrix};
pub use report::{
    effective_counts, emit_report, read_report, Report, ReportConfig, ReportPaths, TableRow,
    FINGERPRINTS_CSV, REPORT_JSON, TRIALS_CSV,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// [`anneal_feasible`]: moves between zero-penalty encodings.
    #[default]
    Feasible,
    /// [`simulated_anneal`]: plain single-bit Metropolis on the full QUBO.
    SingleFlip,
}

/// Which samples "effective" is judged on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EvalSet {
    #[default]
    Sample,
    Full,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n_samples: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    /// Overrides the solver's default sweep count.
    pub sweeps: Option<usize>,
    pub restarts: usize,
    /// Explicit weights; when absent, defaults for the subsample scaled by
    /// `penalty_scale`.
    pub weights: Option<PenaltyWeights>,
    pub penalty_scale: f64,
    pub solver: SolverKind,
    pub eval_set: EvalSet,
}

impl TrialConfig {
    pub fn new(n_samples: usize, m: usize) -> Self {
        Self {
            n_samples,
            m,
            trials: 10,
            seed: 0,
            sweeps: None,
            restarts: 1,
            weights: None,
            penalty_scale: 1.0,
            solver: SolverKind::default(),
            eval_set: EvalSet::default(),
        }
    }

    fn validate(&self, d: &Dataset) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.n_samples < 2 || self.n_samples > d.n_samples() {
            return Err(Error::Range {
                what: "n_samples",
                value: self.n_samples,
                min: 2,
                max: d.n_samples(),
            });
        }
        if !(self.penalty_scale.is_finite() && self.penalty_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "penalty scale must be positive, got {}",
                self.penalty_scale
            )));
        }
        Ok(())
    }

    /// Annealing seed for one trial; restarts within it use `seed + r`.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add((trial as u64 + 1) << 32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mse_interaction: f64,
    pub mse_best_single: f64,
    pub best_single: String,
    pub effective: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_id: usize,
    pub n_samples: usize,
    pub m: usize,
    pub decoded: DecodedSolution,
    pub fingerprint_string: String,
    pub u: usize,
    pub energy: f64,
    /// Absent when nothing was selected.
    pub mse_interaction: Option<f64>,
    pub mse_best_single: f64,
    pub effective: bool,
    /// Evaluation on the subsample the QUBO was built from.
    pub sample_eval: Option<Evaluation>,
    /// Evaluation on every row of the input dataset.
    pub full_eval: Option<Evaluation>,
    /// Why the trial could not be evaluated, if it could not.
    pub failure: Option<String>,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
}

/// Strict improvement over the best single fingerprint; a tie is not one.
pub fn effectiveness(mse_interaction: f64, mse_best_single: f64) -> bool {
    mse_interaction < mse_best_single
}

fn evaluate(d: &Dataset, f: &FingerprintSet, baseline: (usize, f64)) -> Result<Evaluation> {
    let mse_interaction = stump::score_fingerprint(d, f, Objective::Mse)?;
    Ok(Evaluation {
        mse_interaction,
        mse_best_single: baseline.1,
        best_single: stump::render_name(&d.feature_names()[baseline.0]),
        effective: effectiveness(mse_interaction, baseline.1),
    })
}

struct Prepared {
    sample: Dataset,
    model: QuboModel,
    baseline_sample: (usize, f64),
    baseline_full: Option<(usize, f64)>,
}

fn prepare(d: &Dataset, cfg: &TrialConfig) -> Result<Prepared> {
    cfg.validate(d)?;
    // one subsample per (seed, n_samples), shared by every M
    let sample = d.subsample(cfg.n_samples, cfg.seed)?;
    let weights = cfg
        .weights
        .unwrap_or_else(|| PenaltyWeights::default_for(&sample).scaled(cfg.penalty_scale));
    let model = build_qubo(&sample, cfg.m, weights)?;
    let baseline_sample = best_single_baseline(&sample)?;
    let baseline_full = match cfg.eval_set {
        EvalSet::Sample => None,
        EvalSet::Full | EvalSet::Both => Some(best_single_baseline(d)?),
    };
    Ok(Prepared {
        sample,
        model,
        baseline_sample,
        baseline_full,
    })
}

fn run_one(d: &Dataset, cfg: &TrialConfig, p: &Prepared, trial_id: usize) -> Result<TrialResult> {
    let started = Instant::now();
    let seed = cfg.trial_seed(trial_id);
    let solution = match cfg.solver {
        SolverKind::Feasible => {
            let s = AnnealSchedule::for_feasible(
                &p.model,
                cfg.sweeps.unwrap_or(DEFAULT_FEASIBLE_SWEEPS),
                cfg.restarts,
                seed,
            );
            anneal_feasible(&p.sample, &p.model, &s)?
        }
        SolverKind::SingleFlip => {
            let s = AnnealSchedule::for_model(
                &p.model,
                cfg.sweeps.unwrap_or(DEFAULT_SWEEPS),
                cfg.restarts,
                seed,
            );
            simulated_anneal(p.model.qubo(), &s)?
        }
    };
    let refined = refine_local(p.model.qubo(), &solution.assignment)?;
    let energy = p.model.energy(&refined)?;
    let decoded = check_constraints(&p.sample, &refined, &p.model.layout)?;
    let fingerprint = decoded.fingerprint.clone();

    let (sample_eval, full_eval, failure) = if fingerprint.is_empty() {
        (None, None, Some("no fingerprint selected".to_owned()))
    } else {
        let sample_eval = match cfg.eval_set {
            EvalSet::Sample | EvalSet::Both => {
                Some(evaluate(&p.sample, &fingerprint, p.baseline_sample)?)
            }
            EvalSet::Full => None,
        };
        let full_eval = match p.baseline_full {
            Some(b) => Some(evaluate(d, &fingerprint, b)?),
            None => None,
        };
        (sample_eval, full_eval, None)
    };
    let primary = match cfg.eval_set {
        EvalSet::Sample | EvalSet::Both => sample_eval.as_ref(),
        EvalSet::Full => full_eval.as_ref(),
    };
    let (mse_interaction, mse_best_single, effective) = match primary {
        Some(e) => (Some(e.mse_interaction), e.mse_best_single, e.effective),
        None => (None, p.baseline_sample.1, false),
    };
    Ok(TrialResult {
        trial_id,
        n_samples: cfg.n_samples,
        m: cfg.m,
        fingerprint_string: fingerprint.render(d),
        u: fingerprint.u(),
        decoded,
        energy,
        mse_interaction,
        mse_best_single,
        effective,
        sample_eval,
        full_eval,
        failure,
        wall_time: started.elapsed(),
    })
}

/// Runs `cfg.trials` independent annealing trials on one subsample.
/// Results are ordered by trial id and do not depend on thread count.
pub fn run_trials(d: &Dataset, cfg: &TrialConfig) -> Result<Vec<TrialResult>> {
    let prepared = prepare(d, cfg)?;
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_one(d, cfg, &prepared, t))
        .collect()
}

/// Runs every `(n_samples, m)` combination, reusing `base` for the rest.
pub fn run_grid(
    d: &Dataset,
    n_samples: &[usize],
    ms: &[usize],
    base: &TrialConfig,
) -> Result<Vec<TrialResult>> {
    let mut out = Vec::new();
    for &n in n_samples {
        for &m in ms {
            let cfg = TrialConfig {
                n_samples: n,
                m,
                ..base.clone()
            };
            out.extend(run_trials(d, &cfg)?);
        }
    }
    Ok(out)
}

/// Distinct decoded fingerprints in first-seen order.
pub fn distinct_fingerprints<'a>(
    results: impl IntoIterator<Item = &'a TrialResult>,
) -> Vec<FingerprintSet> {
    let mut seen = Vec::<FingerprintSet>::new();
    for r in results {
        let f = &r.decoded.fingerprint;
        if !f.is_empty() && !seen.contains(f) {
            seen.push(f.clone());
        }
    }
    seen
}
