mod common;

use std::sync::Arc;

use grapes_core::model::{structure_utility, Assignment, Partition, ProblemInstance};
use grapes_core::probgen::CompositionSpec;
use grapes_core::runner::{run, Algorithm, RunOptions};
use grapes_core::sda::{run_auction, SdaConfig};
use grapes_core::simnet::{EngineConfig, NetworkConfig};
use grapes_core::verify::{
    brute_force_optimum, is_nash_stable, is_pairwise_stable, Verdict, Witness,
};

use common::{grid_instance, small_instance};

fn sync() -> RunOptions {
    RunOptions::default()
}

#[test]
fn greedy_tie_break_loses_to_optimum() {
    // Robots 0 and 1 offer service 0, robot 2 offers service 1. Both tasks need
    // one of each, so only one can be done and robot 2 decides which.
    let inst = Arc::new(
        ProblemInstance::new(
            2,
            vec![vec![1, 0], vec![1, 0], vec![0, 1]],
            vec![(vec![1, 1], 5), (vec![1, 1], 7)],
        )
        .unwrap(),
    );
    let grape = run(Algorithm::GrapeS, &inst, &sync()).unwrap();
    let best = brute_force_optimum(&inst).unwrap();
    assert_eq!(best.utility, 7);
    assert_eq!(grape.utility, 5);
    assert!(is_nash_stable(&grape.partition, &inst, false).is_stable());
}

#[test]
fn blocked_swap_is_fixed_by_pairwise_phase() {
    // A can do services 0 and 1, B only service 0.
    let inst = Arc::new(
        ProblemInstance::new(
            2,
            vec![vec![1, 1], vec![1, 0]],
            vec![(vec![1, 0], 5), (vec![0, 1], 7)],
        )
        .unwrap(),
    );
    let stuck = Partition::from_assignments(vec![Assignment::slot(0, 0), Assignment::Void]);
    match is_pairwise_stable(&stuck, &inst) {
        Verdict::Unstable(Witness::BlockingPair { idle, assigned, .. }) => {
            assert_eq!((idle, assigned), (1, 0))
        }
        other => panic!("expected blocking pair, got {other:?}"),
    }
    let pair = run(Algorithm::PairGrapeS, &inst, &sync()).unwrap();
    assert_eq!(pair.utility, 12);
    assert!(pair.stable_pairwise);
}

#[test]
fn oracle_dominates_every_algorithm_on_small_instances() {
    for seed in 0..60 {
        let inst = Arc::new(small_instance(seed, 7, seed % 2 == 0));
        let best = brute_force_optimum(&inst).unwrap();
        for alg in Algorithm::ALL {
            let r = run(alg, &inst, &sync()).unwrap();
            assert!(
                r.utility <= best.utility,
                "{alg} beat the oracle on seed {seed}"
            );
            assert!(!r.timeout);
        }
        assert_eq!(structure_utility(&inst, &best.partition), best.utility);
    }
}

#[test]
fn achievable_generated_instance_has_full_optimum() {
    let inst = grid_instance(5, 6, 50, CompositionSpec::FIVE_FIVE, 0);
    assert_eq!(
        brute_force_optimum(&inst).unwrap().utility,
        inst.total_utility()
    );
}

#[test]
fn distributed_sda_matches_centralized_auction() {
    for trial in 0..6 {
        for comp in CompositionSpec::ALL {
            let inst = grid_instance(11, 50, 10, comp, trial);
            let central = run_auction(&inst, &SdaConfig::default()).unwrap();
            let r = run(Algorithm::Sda, &inst, &sync()).unwrap();
            assert!(!r.timeout);
            assert_eq!(r.partition, central.partition(), "{comp} trial {trial}");
            assert_eq!(r.auction_rounds, Some(central.rounds));
            let asy = run(
                Algorithm::Sda,
                &inst,
                &RunOptions::with_engine(EngineConfig::asynchronous(NetworkConfig::default())),
            )
            .unwrap();
            assert_eq!(asy.partition, central.partition());
        }
    }
}

#[test]
fn degenerate_async_reproduces_sync() {
    for trial in 0..4 {
        for comp in CompositionSpec::ALL {
            let inst = grid_instance(3, 30, 50, comp, trial);
            for alg in Algorithm::ALL {
                let s = run(alg, &inst, &sync()).unwrap();
                let a = run(
                    alg,
                    &inst,
                    &RunOptions::with_engine(EngineConfig::degenerate_async(trial as u64)),
                )
                .unwrap();
                assert_eq!(s.partition, a.partition, "{alg} {comp} trial {trial}");
            }
        }
    }
}

#[test]
fn grape_s_survives_ten_percent_loss() {
    let net = NetworkConfig {
        loss: 0.1,
        seed: 4,
        ..NetworkConfig::default()
    };
    let options = RunOptions::with_engine(EngineConfig::asynchronous(net));
    for comp in CompositionSpec::ALL {
        let inst = grid_instance(8, 50, 10, comp, 0);
        let r = run(Algorithm::GrapeS, &inst, &options).unwrap();
        assert!(!r.timeout, "{comp}");
        assert!(r.stable_nash, "{comp}");
    }
}

#[test]
fn async_sends_more_bytes_than_sync() {
    let inst = grid_instance(2, 50, 50, CompositionSpec::FIVE_ONE, 0);
    let s = run(Algorithm::GrapeS, &inst, &sync()).unwrap();
    let a = run(
        Algorithm::GrapeS,
        &inst,
        &RunOptions::with_engine(EngineConfig::asynchronous(NetworkConfig::default())),
    )
    .unwrap();
    assert_eq!(s.partition.len(), a.partition.len());
    assert!(a.bytes_total > s.bytes_total);
}

#[test]
fn sync_bytes_follow_closed_form() {
    for n in [10u64, 40] {
        let inst = grid_instance(9, n as u32, 50, CompositionSpec::TEN_ONE, 1);
        let r = run(Algorithm::GrapeS, &inst, &sync()).unwrap();
        assert_eq!(r.iterations, n);
        assert_eq!(r.bytes_total, r.iterations * n * (16 + 4 * n));
    }
}
