use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qubofp::experiment::{
    distinct_fingerprints, emit_report, importance, overlap_matrix, read_report, run_grid, Report,
    ReportConfig, DEFAULT_DEPTH,
};
use qubofp::search::{full_search_with_budget, DEFAULT_BUDGET};
use qubofp::stump::score_fingerprint;
use qubofp::{
    best_single_baseline, build_qubo, effectiveness, load_dataset, Dataset, EvalSet,
    FingerprintSet, Objective, PenaltyWeights, SolverKind, TrialConfig,
};

#[derive(Parser)]
#[command(name = "qubofp", version, about = "Interaction-fingerprint search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Annealing trials over every (n-samples, m) pair, written as a report.
    Search(SearchArgs),
    /// Brute-force search over all conjunctions of up to M columns.
    Fullsearch(FullsearchArgs),
    /// Scores one conjunction against the best single column.
    Evaluate(EvaluateArgs),
    /// Match fractions between conjunctions.
    Overlap(OverlapArgs),
    /// Rewrites the CSV tables from an existing report.json.
    Report(ReportArgs),
    /// Writes the QUBO for one subsample as text.
    ExportQubo(ExportArgs),
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Append a NOT_<name> complement for every column.
    #[arg(long)]
    augment: bool,
    /// Shift targets to zero mean.
    #[arg(long)]
    center: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let mut d = load_dataset(&self.dataset)
            .with_context(|| format!("loading {}", self.dataset.display()))?;
        if self.augment {
            d = d.augment_complements()?;
        }
        if self.center {
            d = d.mean_centered();
        }
        Ok(d)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Swmse,
    Mse,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Swmse => Objective::Swmse,
            ObjectiveArg::Mse => Objective::Mse,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalSetArg {
    Sample,
    Full,
    Both,
}

impl From<EvalSetArg> for EvalSet {
    fn from(e: EvalSetArg) -> Self {
        match e {
            EvalSetArg::Sample => EvalSet::Sample,
            EvalSetArg::Full => EvalSet::Full,
            EvalSetArg::Both => EvalSet::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Feasible,
    SingleFlip,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Feasible => SolverKind::Feasible,
            SolverArg::SingleFlip => SolverKind::SingleFlip,
        }
    }
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Maximum conjunction sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<usize>,
    /// Subsample sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n_samples: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to the solver's own sweep count.
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, default_value_t = 1.0)]
    penalty_scale: f64,
    #[arg(long, value_enum, default_value = "sample")]
    eval_set: EvalSetArg,
    #[arg(long, value_enum, default_value = "feasible")]
    solver: SolverArg,
    /// Depth of the importance tree.
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FullsearchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    m: usize,
    #[arg(long, value_enum, default_value = "swmse")]
    objective: ObjectiveArg,
    /// Search a subsample of this size instead of every row.
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Refuse to run above this many candidates.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Column names joined by commas, e.g. `RING,NOT_QCH3`.
    #[arg(long, required = true)]
    fingerprint: String,
}

#[derive(Args)]
struct OverlapArgs {
    #[command(flatten)]
    data: DataArgs,
    /// One conjunction per flag, names joined by commas.
    #[arg(long = "fingerprint", required = true)]
    fingerprints: Vec<String>,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// A report.json written by `search`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    penalty_scale: f64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_fingerprint(d: &Dataset, spec: &str) -> Result<FingerprintSet> {
    let names: Vec<&str> = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if names.is_empty() {
        bail!("empty fingerprint {spec:?}");
    }
    Ok(FingerprintSet::from_names(d, &names)?)
}

fn maybe_subsample(d: Dataset, n: Option<usize>, seed: u64) -> Result<Dataset> {
    Ok(match n {
        Some(n) => d.subsample(n, seed)?,
        None => d,
    })
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn search(args: SearchArgs) -> Result<()> {
    let d = args.data.load()?;
    let base = TrialConfig {
        trials: args.trials,
        seed: args.seed,
        sweeps: args.sweeps,
        restarts: args.restarts,
        penalty_scale: args.penalty_scale,
        solver: args.solver.into(),
        eval_set: args.eval_set.into(),
        ..TrialConfig::new(args.n_samples[0], args.m[0])
    };
    let trials = run_grid(&d, &args.n_samples, &args.m, &base)?;
    let fps = distinct_fingerprints(&trials);
    let (overlap, imp) = if fps.is_empty() {
        (None, None)
    } else {
        (
            Some(overlap_matrix(&d, &fps)?),
            Some(importance(&d, &fps, args.depth)?),
        )
    };
    let mut config = ReportConfig::new(&base, &args.n_samples, &args.m);
    config.dataset = Some(args.data.dataset.display().to_string());
    let report = Report::new(config, trials, overlap, imp);
    let paths = emit_report(&report, &args.out)?;

    for (cell, count) in &report.effective_counts {
        println!("n_samples,m={cell}: {count}/{} effective", args.trials);
    }
    for row in report.fingerprint_rows() {
        println!(
            "{:>3}  N_S={:<6} M={:<2} U={:<2} {}",
            row.id, row.n_samples, row.m, row.u, row.fingerprint
        );
    }
    println!("wrote {}", paths.json.display());
    Ok(())
}

fn fullsearch(args: FullsearchArgs) -> Result<()> {
    let d = maybe_subsample(args.data.load()?, args.n_samples, args.seed)?;
    let r = full_search_with_budget(&d, args.m, args.objective.into(), args.budget)?;
    print_json(&serde_json::json!({
        "fingerprint": r.best.render(&d),
        "indices": r.best.indices(),
        "swmse": r.swmse,
        "mse": r.mse,
        "candidates_evaluated": r.candidates_evaluated.to_string(),
        "wall_time": r.wall_time.as_secs_f64(),
    }))
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let d = args.data.load()?;
    let f = parse_fingerprint(&d, &args.fingerprint)?;
    let mse = score_fingerprint(&d, &f, Objective::Mse)?;
    let swmse = score_fingerprint(&d, &f, Objective::Swmse)?;
    let (j, baseline) = best_single_baseline(&d)?;
    print_json(&serde_json::json!({
        "fingerprint": f.render(&d),
        "u": f.u(),
        "mse": mse,
        "swmse": swmse,
        "best_single": qubofp::stump::render_name(&d.feature_names()[j]),
        "mse_best_single": baseline,
        "effective": effectiveness(mse, baseline),
    }))
}

fn overlap(args: OverlapArgs) -> Result<()> {
    let d = args.data.load()?;
    let fps = args
        .fingerprints
        .iter()
        .map(|s| parse_fingerprint(&d, s))
        .collect::<Result<Vec<_>>>()?;
    let m = overlap_matrix(&d, &fps)?;
    let text = serde_json::to_string_pretty(&m)?;
    match args.out {
        Some(path) => write_text(&path, &text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn report(args: ReportArgs) -> Result<()> {
    let r = read_report(&args.input)?;
    let paths = emit_report(&r, &args.out)?;
    println!("wrote {}", paths.fingerprints.display());
    Ok(())
}

fn export_qubo(args: ExportArgs) -> Result<()> {
    let d = maybe_subsample(args.data.load()?, args.n_samples, args.seed)?;
    let weights = PenaltyWeights::default_for(&d).scaled(args.penalty_scale);
    let model = build_qubo(&d, args.m, weights)?;
    model.write_text(&args.out)?;
    let l = model.layout;
    println!(
        "{} variables (n_f={}, n_s={}, m={}), {} quadratic terms",
        l.total,
        l.n_f,
        l.n_s,
        l.m,
        model.qubo().quadratic().len()
    );
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Search(a) => search(a),
        Command::Fullsearch(a) => fullsearch(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Overlap(a) => overlap(a),
        Command::Report(a) => report(a),
        Command::ExportQubo(a) => export_qubo(a),
    }
}
