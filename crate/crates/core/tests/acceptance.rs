//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use grapes_core::experiment::{
    records_to_csv, run_experiment, write_outputs, CellSpec, ExperimentConfig, TRIALS_FILE,
};
use grapes_core::model::ProblemInstance;
use grapes_core::probgen::{trial_seed, CompositionSpec};
use grapes_core::runner::{run, Algorithm, RunOptions, RunResult};
use grapes_core::simnet::{EngineConfig, NetworkConfig};
use grapes_core::verify::{brute_force_optimum, is_nash_stable, is_pairwise_stable};

use common::{grid_instance, small_instance};

/// Base seed shared with the CLI default.
const SEED: u64 = 1;
const TRIALS: u32 = 25;
const EXACT_N: [CompositionSpec; 3] = [
    CompositionSpec::FIVE_ONE,
    CompositionSpec::FIVE_FIVE,
    CompositionSpec::TEN_ONE,
];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn sync_opts() -> RunOptions {
    RunOptions::default()
}

fn async_opts(loss: f64, seed: u64) -> RunOptions {
    RunOptions::with_engine(EngineConfig::asynchronous(NetworkConfig {
        loss,
        seed,
        ..NetworkConfig::default()
    }))
}

fn run_ok(alg: Algorithm, inst: &Arc<ProblemInstance>, opts: &RunOptions) -> RunResult {
    run(alg, inst, opts).expect("run accepts generated instances")
}

/// Sync GRAPE-S and Pair-GRAPE-S over the desk grid, keyed by (n, pct, composition).
struct GridRuns {
    grape: BTreeMap<(u32, u32, CompositionSpec), Vec<RunResult>>,
    pair: BTreeMap<(u32, u32, CompositionSpec), Vec<RunResult>>,
}

fn grid_runs() -> GridRuns {
    let mut grape = BTreeMap::new();
    let mut pair = BTreeMap::new();
    for n in [50, 100] {
        for pct in [10, 50] {
            for comp in CompositionSpec::ALL {
                let key = (n, pct, comp);
                for trial in 0..TRIALS {
                    let inst = grid_instance(SEED, n, pct, comp, trial);
                    grape.entry(key).or_insert_with(Vec::new).push(run_ok(
                        Algorithm::GrapeS,
                        &inst,
                        &sync_opts(),
                    ));
                    pair.entry(key).or_insert_with(Vec::new).push(run_ok(
                        Algorithm::PairGrapeS,
                        &inst,
                        &sync_opts(),
                    ));
                }
            }
        }
    }
    GridRuns { grape, pair }
}

fn lower_median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

fn criterion_1(g: &GridRuns) -> Verdict {
    let total: usize = g.pair.values().map(Vec::len).sum();
    let misses: Vec<String> = g
        .pair
        .iter()
        .flat_map(|(&(n, pct, comp), runs)| {
            runs.iter()
                .enumerate()
                .filter(|(_, r)| r.percent_utility != 100.0)
                .map(move |(t, r)| {
                    format!("n={n} {pct}% {comp} trial {t}: {:.2}", r.percent_utility)
                })
        })
        .collect();
    verdict(
        misses.is_empty(),
        format!(
            "Pair-GRAPE-S 100% utility in {}/{} sync trials {:?}",
            total - misses.len(),
            total,
            misses
        ),
    )
}

fn criterion_2(g: &GridRuns) -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for (&(n, pct, comp), runs) in &g.grape {
        let utils: Vec<f64> = runs.iter().map(|r| r.percent_utility).collect();
        let min = utils.iter().copied().fold(f64::INFINITY, f64::min);
        if comp == CompositionSpec::TEN_FIVE {
            let median = lower_median(utils);
            let ok = median == 100.0 && min >= 89.0;
            pass &= ok;
            notes.push(format!(
                "n={n} {pct}% 10:5 median {median:.2} min {min:.2}{}",
                if ok { "" } else { " (below floor)" }
            ));
        } else if min != 100.0 {
            pass = false;
            notes.push(format!("n={n} {pct}% {comp} min {min:.2}"));
        }
    }
    verdict(
        pass,
        format!(
            "GRAPE-S quality; 5:1, 5:5, 10:1 all 100% unless listed; {}",
            notes.join("; ")
        ),
    )
}

fn criterion_3(g: &GridRuns) -> Verdict {
    let mut bad = Vec::new();
    for (&(n, pct, comp), runs) in &g.grape {
        for (t, r) in runs.iter().enumerate() {
            let ok = if EXACT_N.contains(&comp) {
                r.iterations == u64::from(n)
            } else {
                r.iterations >= u64::from(n)
            };
            if !ok || r.timeout {
                bad.push(format!(
                    "n={n} {pct}% {comp} trial {t}: {} iterations",
                    r.iterations
                ));
            }
        }
    }
    let total: usize = g.grape.values().map(Vec::len).sum();
    verdict(
        bad.is_empty(),
        format!(
            "iteration law held in {}/{} sync GRAPE-S runs {:?}",
            total - bad.len(),
            total,
            bad
        ),
    )
}

fn criterion_4() -> Verdict {
    let mut instances = Vec::new();
    for n in [20, 30, 50] {
        for pct in [10, 50] {
            for comp in CompositionSpec::ALL {
                for trial in 0..7 {
                    instances.push((n, pct, comp, trial));
                }
            }
        }
    }
    for pct in [10, 50] {
        for comp in CompositionSpec::ALL {
            instances.push((100, pct, comp, 0));
        }
    }
    let mut checked = 0;
    let mut timeouts = 0;
    let mut failures = Vec::new();
    for (n, pct, comp, trial) in instances {
        let inst = grid_instance(SEED + 1, n, pct, comp, trial);
        let net_seed = trial_seed(SEED + 1, n, pct, comp, trial);
        let engines = [
            ("sync", sync_opts()),
            ("p=0", async_opts(0.0, net_seed)),
            ("p=0.05", async_opts(0.05, net_seed)),
        ];
        for (label, opts) in &engines {
            for alg in [Algorithm::GrapeS, Algorithm::PairGrapeS] {
                let r = run_ok(alg, &inst, opts);
                if r.timeout {
                    timeouts += 1;
                    continue;
                }
                checked += 1;
                let stable = match alg {
                    Algorithm::PairGrapeS => is_pairwise_stable(&r.partition, &inst).is_stable(),
                    _ => is_nash_stable(&r.partition, &inst, false).is_stable(),
                };
                if !stable {
                    failures.push(format!("{alg} {label} n={n} {pct}% {comp} trial {trial}"));
                }
            }
        }
    }
    verdict(
        failures.is_empty() && checked >= 1000,
        format!(
            "{checked} converged runs verified stable, {timeouts} timeouts, failures {failures:?}"
        ),
    )
}

fn criterion_5() -> Verdict {
    let mut exceeded = Vec::new();
    let mut pair_misses = Vec::new();
    let mut achievable = 0;
    for seed in 0..200u64 {
        let inst = Arc::new(small_instance(seed, 8, seed % 2 == 0));
        let best = brute_force_optimum(&inst).expect("small instance").utility;
        let mut values = BTreeMap::new();
        for alg in Algorithm::ALL {
            values.insert(alg, run_ok(alg, &inst, &sync_opts()).utility);
        }
        if values.values().any(|&v| v > best) {
            exceeded.push(seed);
        }
        if best == inst.total_utility() {
            achievable += 1;
            if values[&Algorithm::PairGrapeS] != best {
                pair_misses.push(seed);
            }
        }
    }
    verdict(
        exceeded.is_empty() && pair_misses.is_empty(),
        format!(
            "oracle never exceeded (violations {exceeded:?}); Pair-GRAPE-S equal to oracle on {}/{achievable} achievable instances (misses {pair_misses:?})",
            achievable - pair_misses.len()
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut ratios = Vec::new();
    let mut ok = true;
    for comp in EXACT_N {
        for trial in 0..3 {
            let bytes = |n: u32| {
                let inst = grid_instance(SEED, n, 50, comp, trial);
                let r = run_ok(Algorithm::GrapeS, &inst, &sync_opts());
                assert_eq!(r.iterations, u64::from(n));
                r.bytes_total as f64
            };
            let (b50, b100, b200) = (bytes(50), bytes(100), bytes(200));
            for ratio in [b100 / b50, b200 / b100] {
                ok &= (7.2..=8.8).contains(&ratio);
                ratios.push(ratio);
            }
        }
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let mut async_lower = Vec::new();
    let mut compared = 0;
    for pct in [10, 50] {
        for comp in CompositionSpec::ALL {
            for trial in 0..2 {
                let inst = grid_instance(SEED, 50, pct, comp, trial);
                let seed = trial_seed(SEED, 50, pct, comp, trial);
                for alg in [Algorithm::GrapeS, Algorithm::PairGrapeS] {
                    let s = run_ok(alg, &inst, &sync_opts());
                    let a = run_ok(alg, &inst, &async_opts(0.0, seed));
                    compared += 1;
                    if a.bytes_total <= s.bytes_total {
                        async_lower.push(format!("{alg} {pct}% {comp} trial {trial}"));
                    }
                }
            }
        }
    }
    verdict(
        ok && async_lower.is_empty(),
        format!(
            "byte ratios for n=100 and n=200 in [{lo:.3}, {hi:.3}]; async > sync in {}/{compared} matched runs {async_lower:?}",
            compared - async_lower.len()
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut pass = true;
    let mut medians = Vec::new();
    for pct in [10, 50] {
        for comp in CompositionSpec::ALL {
            let utils: Vec<f64> = (0..TRIALS)
                .map(|t| {
                    run_ok(
                        Algorithm::Sda,
                        &grid_instance(SEED, 100, pct, comp, t),
                        &sync_opts(),
                    )
                    .percent_utility
                })
                .collect();
            let median = lower_median(utils);
            pass &= median >= 95.0;
            medians.push(format!("{pct}% {comp} {median:.2}"));
        }
    }
    let mut ratios = Vec::new();
    for comp in CompositionSpec::ALL {
        for trial in 0..3 {
            let inst = grid_instance(SEED, 100, 50, comp, trial);
            let opts = async_opts(0.0, trial_seed(SEED, 100, 50, comp, trial));
            let sda = run_ok(Algorithm::Sda, &inst, &opts);
            let grape = run_ok(Algorithm::GrapeS, &inst, &opts);
            pass &= !sda.timeout && !grape.timeout;
            ratios.push(sda.iterations as f64 / grape.iterations as f64);
        }
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    pass &= min_ratio > 5.0;
    verdict(
        pass,
        format!(
            "sync SDA medians at n=100 [{}]; async SDA/GRAPE-S decision rounds at n=100 50% min ratio {min_ratio:.2} over {} instances",
            medians.join(", "),
            ratios.len()
        ),
    )
}

fn criterion_8() -> Verdict {
    let mut mismatches = Vec::new();
    let mut runs = 0;
    for n in [10, 20, 30, 40, 50] {
        for comp in CompositionSpec::ALL {
            for trial in 0..5 {
                let inst = grid_instance(SEED + 2, n, 50, comp, trial);
                let degenerate =
                    RunOptions::with_engine(EngineConfig::degenerate_async(u64::from(trial)));
                for alg in Algorithm::ALL {
                    let s = run_ok(alg, &inst, &sync_opts());
                    let a = run_ok(alg, &inst, &degenerate);
                    runs += 1;
                    if s.partition != a.partition || a.timeout {
                        mismatches.push(format!("{alg} n={n} {comp} trial {trial}"));
                    }
                }
            }
        }
    }
    verdict(
        mismatches.is_empty(),
        format!(
            "degenerate async matched sync on {}/{runs} runs over 100 instances {mismatches:?}",
            runs - mismatches.len()
        ),
    )
}

fn criterion_9() -> Verdict {
    let mut config = ExperimentConfig {
        cells: vec![
            CellSpec::new(20, 10, CompositionSpec::TEN_FIVE),
            CellSpec::new(30, 50, CompositionSpec::FIVE_ONE),
        ],
        trials: 3,
        seed: 99,
        ..ExperimentConfig::default()
    };
    let mut same = true;
    for (mode, loss) in [("sync", 0.0), ("async", 0.05)] {
        if mode == "async" {
            config.options.engine = EngineConfig::asynchronous(NetworkConfig {
                loss,
                ..NetworkConfig::default()
            });
        }
        let a = records_to_csv(&run_experiment(&config).expect("valid config")).expect("csv");
        let b = records_to_csv(&run_experiment(&config).expect("valid config")).expect("csv");
        same &= a == b;
        let (d1, d2) = (
            tempfile::tempdir().expect("tmp"),
            tempfile::tempdir().expect("tmp"),
        );
        write_outputs(&run_experiment(&config).expect("valid config"), d1.path()).expect("write");
        write_outputs(&run_experiment(&config).expect("valid config"), d2.path()).expect("write");
        let f1 = std::fs::read(d1.path().join(TRIALS_FILE)).expect("read");
        let f2 = std::fs::read(d2.path().join(TRIALS_FILE)).expect("read");
        same &= f1 == f2 && f1 == a;
    }
    verdict(
        same,
        "reruns of sync and lossy async experiments produced byte-identical trial CSVs",
    )
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    let mut report = |id: u32, name: &str, start: Instant, v: Verdict| {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} criterion {id} ({name}, {:.1}s): {}",
            start.elapsed().as_secs_f64(),
            v.detail
        );
        results.push(v.pass);
    };

    let t = Instant::now();
    let grid = grid_runs();
    report(1, "Pair-GRAPE-S optimality", t, criterion_1(&grid));
    report(2, "GRAPE-S quality", t, criterion_2(&grid));
    report(3, "iteration law", t, criterion_3(&grid));
    let t = Instant::now();
    report(4, "stability postconditions", t, criterion_4());
    let t = Instant::now();
    report(5, "oracle equivalence", t, criterion_5());
    let t = Instant::now();
    report(6, "communication scaling", t, criterion_6());
    let t = Instant::now();
    report(7, "SDA baseline", t, criterion_7());
    let t = Instant::now();
    report(8, "degenerate async equivalence", t, criterion_8());
    let t = Instant::now();
    report(9, "determinism", t, criterion_9());

    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
