//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines always reach stdout; exits non-zero on any FAIL.

mod common;

use std::time::{Duration, Instant};

use qubofp::experiment::{run_grid, Report, ReportConfig};
use qubofp::qubo::QuboBuilder;
use qubofp::solver::DEFAULT_FEASIBLE_SWEEPS;
use qubofp::{
    anneal_feasible, build_qubo, check_constraints, count_combinations, exhaustive_solve,
    full_search, simulated_anneal, split_stats, swmse, AnnealSchedule, Assignment, FingerprintSet,
    Objective, PenaltyWeights, TrialConfig,
};
use rand::Rng;

use common::{close, planted_dataset, random_dataset, rng, subsets};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn oracle_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    for seed in 0..20 {
        let d = random_dataset(&mut rng(seed), 20, 8);
        let model = build_qubo(&d, 2, PenaltyWeights::default_for(&d)).unwrap();
        let best_energy = subsets(8, 2)
            .into_iter()
            .map(|s| {
                let f = FingerprintSet::new(s, 8).unwrap();
                let a = Assignment::encode(&d, &f, &model.layout).unwrap();
                model.energy(&a).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        let searched = full_search(&d, 2, Objective::Swmse).unwrap().swmse;
        let rel = (best_energy - searched).abs() / searched.abs().max(1e-300);
        worst = worst.max(rel);
        if !close(best_energy, searched, 1e-9, 0.0) {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("20 datasets, {mismatches} mismatches, worst relative gap {worst:.2e}"),
    )
}

fn hamiltonian_equals_swmse() -> Outcome {
    let mut r = rng(101);
    let mut checked = 0;
    let mut energy_mismatch = 0;
    let mut unpenalized = 0;
    let mut worst = 0.0f64;
    while checked < 1000 {
        let n_s = r.gen_range(4..=12);
        let n_f = r.gen_range(2..=6);
        let m = r.gen_range(1..=n_f.min(3));
        let d = random_dataset(&mut r, n_s, n_f);
        let weights = PenaltyWeights::default_for(&d);
        let model = build_qubo(&d, m, weights).unwrap();
        let loss_only = build_qubo(&d, m, PenaltyWeights::uniform(0.0)).unwrap();
        for _ in 0..20 {
            let u = r.gen_range(1..=m);
            let mut picked: Vec<usize> = (0..n_f).collect();
            for k in 0..u {
                let s = r.gen_range(k..n_f);
                picked.swap(k, s);
            }
            let f = FingerprintSet::new(picked[..u].iter().copied(), n_f).unwrap();
            let a = Assignment::encode(&d, &f, &model.layout).unwrap();
            let e = model.energy(&a).unwrap();
            let g = qubofp::interaction_values(&d, &f).unwrap();
            let s = swmse(&split_stats(d.targets(), &g).unwrap(), n_s).unwrap();
            worst = worst.max((e - s).abs() / d.target_variance().max(1e-300));
            if !close(e, s, 1e-9, d.target_variance()) {
                energy_mismatch += 1;
            }

            // one flipped θ_X bit: energy minus the loss part is the penalty
            let mut bad = a.clone();
            let i = r.gen_range(0..n_s);
            let c = r.gen_range(0..=m);
            let l = model.layout.unsatisfied(i, c);
            bad.bits[l] ^= 1;
            let penalty = model.energy(&bad).unwrap() - loss_only.energy(&bad).unwrap();
            let decoded = check_constraints(&d, &bad, &model.layout).unwrap();
            if penalty <= 0.0 || penalty.is_nan() || decoded.valid {
                unpenalized += 1;
            }
            checked += 1;
        }
    }
    outcome(
        energy_mismatch == 0 && unpenalized == 0,
        format!(
            "{checked} assignments, {energy_mismatch} energy mismatches (worst {worst:.2e} of Var), \
             {unpenalized} corrupted without penalty"
        ),
    )
}

fn swmse_bounded_by_mse() -> Outcome {
    let mut r = rng(202);
    let mut violations = 0;
    let mut empty = 0;
    for _ in 0..1000 {
        let n = r.gen_range(3..=40);
        let t: Vec<f64> = (0..n).map(|_| r.gen_range(-5.0..5.0)).collect();
        let p = match r.gen_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            _ => 0.5,
        };
        let g: Vec<u8> = (0..n).map(|_| u8::from(r.gen_bool(p))).collect();
        let s = split_stats(&t, &g).unwrap();
        let sw = swmse(&s, n).unwrap();
        let ms = qubofp::mse(&s, n).unwrap();
        let one_group = s.n1 == 0 || s.n0 == 0;
        empty += usize::from(one_group);
        let ok = if one_group { sw == ms } else { sw < ms };
        violations += usize::from(!ok);
    }
    outcome(
        violations == 0,
        format!("1000 splits ({empty} with an empty group), {violations} violations"),
    )
}

fn sa_recovery() -> Outcome {
    let mut hits = 0;
    for seed in 0..10 {
        let (d, planted) = planted_dataset(1000 + seed, 15, 100, &[1, 4, 9], 0.1);
        let planted_swmse =
            qubofp::stump::score_fingerprint(&d, &planted, Objective::Swmse).unwrap();
        let cfg = TrialConfig {
            trials: 1,
            restarts: 10,
            seed,
            ..TrialConfig::new(100, 3)
        };
        let t = &qubofp::run_trials(&d, &cfg).unwrap()[0];
        let found = t.decoded.swmse.unwrap_or(f64::INFINITY);
        if found <= planted_swmse * (1.0 + 1e-12) && t.effective {
            hits += 1;
        }
    }
    outcome(
        hits >= 8,
        format!("{hits}/10 seeds recover the planted optimum"),
    )
}

fn random_qubo(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> qubofp::Qubo {
    let mut b = QuboBuilder::new(n);
    for l in 0..n {
        b.add_linear(l, r.gen_range(-1.0..1.0));
        for m in l + 1..n {
            if r.gen_bool(0.5) {
                b.add_pair(l, m, r.gen_range(-1.0..1.0));
            }
        }
    }
    b.finish()
}

fn exhaustive_check() -> Outcome {
    let mut r = rng(303);
    let mut matches = 0;
    for k in 0..20 {
        let n = r.gen_range(4..=12);
        let q = random_qubo(&mut r, n);
        let exact = exhaustive_solve(&q).unwrap().energy;
        let s = AnnealSchedule::for_qubo(&q, 2000, 8, k);
        let sa = simulated_anneal(&q, &s).unwrap().energy;
        if close(sa, exact, 1e-9, 1.0) {
            matches += 1;
        }
    }
    // 9/10 of 20 models
    outcome(
        matches >= 18,
        format!("{matches}/20 models match the exhaustive optimum"),
    )
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

struct Asymmetry {
    within: usize,
    ratio: f64,
    candidates: u128,
    search_time: Duration,
    build_time: Duration,
}

fn asymmetry_on(d: &qubofp::Dataset, runs: u64) -> Asymmetry {
    let mut search_times = Vec::new();
    let mut full = None;
    for _ in 0..5 {
        let r = full_search(d, 3, Objective::Swmse).unwrap();
        search_times.push(r.wall_time);
        full = Some(r);
    }
    let full = full.unwrap();
    let build_started = Instant::now();
    let model = build_qubo(d, 3, PenaltyWeights::default_for(d)).unwrap();
    let build_time = build_started.elapsed();

    let mut within = 0;
    let mut anneal_times = Vec::new();
    for seed in 0..runs {
        let s = AnnealSchedule::for_feasible(&model, DEFAULT_FEASIBLE_SWEEPS, 1, seed);
        let started = Instant::now();
        let sol = anneal_feasible(d, &model, &s).unwrap();
        anneal_times.push(started.elapsed());
        if sol.energy <= full.swmse * 1.05 {
            within += 1;
        }
    }
    let search_time = median(search_times);
    Asymmetry {
        within,
        ratio: median(anneal_times).as_secs_f64() / search_time.as_secs_f64(),
        candidates: full.candidates_evaluated,
        search_time,
        build_time,
    }
}

/// Two 60-column datasets: a planted 3-way signal and pure noise. Each
/// annealer run gets the default budget (one restart); the claim holds when
/// at least 90% of runs land within 5% of the optimum and the median run
/// takes under a tenth of the full search.
fn cost_asymmetry() -> Outcome {
    let runs = 20;
    let (planted, _) = planted_dataset(4242, 30, 200, &[3, 11, 17], 1.0);
    let noise = random_dataset(&mut rng(4343), 200, 60);
    let (_, cumulative) = count_combinations(60, 3).unwrap();
    let mut pass = cumulative == 36_050;
    let mut parts = Vec::new();
    for (name, d) in [("planted", &planted), ("noise", &noise)] {
        let a = asymmetry_on(d, runs);
        pass &= a.candidates == 36_050 && a.within * 10 >= runs as usize * 9 && a.ratio < 0.10;
        parts.push(format!(
            "{name}: {} candidates in {:.2?}, {}/{runs} within 5%, time ratio {:.3}, \
             QUBO build {:.2?} not counted",
            a.candidates, a.search_time, a.within, a.ratio, a.build_time
        ));
    }
    outcome(pass, parts.join("; "))
}

fn maccs_combinations() -> Outcome {
    let (exact, cumulative) = count_combinations(332, 3).unwrap();
    outcome(
        exact == 6_044_060,
        format!("C(332,3) = {exact}, cumulative {cumulative}"),
    )
}

fn degenerate_guard_and_counts() -> Outcome {
    let mut m1_effective = 0;
    let mut count_mismatch = 0;
    for seed in 0..4 {
        let (d, _) = planted_dataset(500 + seed, 12, 80, &[0, 5], 0.5);
        let base = TrialConfig {
            trials: 5,
            seed,
            ..TrialConfig::new(40, 1)
        };
        let ns = [40, 80];
        let ms = [1, 2, 3];
        let trials = run_grid(&d, &ns, &ms, &base).unwrap();
        m1_effective += trials.iter().filter(|t| t.m == 1 && t.effective).count();
        let report = Report::new(ReportConfig::new(&base, &ns, &ms), trials, None, None);
        for n in ns {
            for m in ms {
                let direct = report
                    .trials
                    .iter()
                    .filter(|t| t.n_samples == n && t.m == m && t.effective)
                    .count();
                if report.effective_counts.get(&format!("{n},{m}")) != Some(&direct) {
                    count_mismatch += 1;
                }
            }
        }
    }
    outcome(
        m1_effective == 0 && count_mismatch == 0,
        format!("{m1_effective} effective M=1 trials, {count_mismatch} mismatched count cells"),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("hamiltonian equals swmse", hamiltonian_equals_swmse),
        ("swmse bounded by mse", swmse_bounded_by_mse),
        ("annealer recovers planted interaction", sa_recovery),
        ("annealer matches exhaustive solver", exhaustive_check),
        ("cost asymmetry against full search", cost_asymmetry),
        ("maccs combination count", maccs_combinations),
        (
            "single-column trials never effective; effective-count cells",
            degenerate_guard_and_counts,
        ),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{status} {name}: {} [{:.2?}]", o.detail, started.elapsed());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
