//! Interaction-fingerprint search for depth-1 regression splits.
//!
//! An interaction fingerprint is the logical AND of several binary base
//! fingerprints. Choosing the conjunction that minimizes the square-weighted
//! stump error is compiled into a QUBO ([`qubo::build_qubo`]), minimized with
//! simulated annealing ([`solver::simulated_anneal`]), and cross-checked
//! against brute-force enumeration ([`search::full_search`]).

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod qubo;
pub mod search;
pub mod solver;
pub mod stump;

pub use dataset::{load_dataset, Dataset};
pub use error::{Error, Result};
pub use experiment::{
    effectiveness, emit_report, importance, overlap_matrix, run_trials, EvalSet, ImportanceReport,
    OverlapMatrix, Report, SolverKind, TrialConfig, TrialResult,
};
pub use qubo::{
    build_qubo, check_constraints, decode, Assignment, DecodedSolution, PenaltyWeights, Qubo,
    QuboModel, VariableLayout,
};
pub use search::{count_combinations, full_search, SearchResult};
pub use solver::{
    anneal_feasible, exhaustive_solve, refine_local, simulated_anneal, AnnealSchedule, Solution,
};
pub use stump::{
    best_single_baseline, interaction_values, mse, split_stats, swmse, FingerprintSet, Objective,
    SplitStats, StumpModel,
};
