//! Shared fixtures for the integration tests.

#![allow(dead_code)]

use std::sync::Arc;

use grapes_core::model::ProblemInstance;
use grapes_core::probgen::{generate, trial_seed, CompositionSpec, GridCell};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A small random instance with at most `max_robots` robots.
///
/// When `achievable` is set, requirements are read off a random assignment of
/// every robot, so a partition satisfying all tasks exists. Otherwise
/// requirements are drawn freely and may be impossible to meet.
pub fn small_instance(seed: u64, max_robots: usize, achievable: bool) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_robots);
    let types = rng.random_range(1..=4usize);
    let caps: Vec<Vec<u32>> = (0..n)
        .map(|_| {
            let mut row = vec![0; types];
            row[rng.random_range(0..types)] = 1;
            for c in row.iter_mut() {
                if rng.random_bool(0.3) {
                    *c = 1;
                }
            }
            row
        })
        .collect();
    let m = rng.random_range(1..=n.min(3));
    let mut reqs = vec![vec![0u32; types]; m];
    if achievable {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for (k, &robot) in order.iter().enumerate() {
            let offered: Vec<usize> = (0..types).filter(|&s| caps[robot][s] == 1).collect();
            let s = offered[rng.random_range(0..offered.len())];
            let task = if k < m { k } else { rng.random_range(0..m) };
            if k < m || rng.random_bool(0.7) {
                reqs[task][s] += 1;
            }
        }
    } else {
        for req in reqs.iter_mut() {
            req[rng.random_range(0..types)] = rng.random_range(1..=3);
            for r in req.iter_mut() {
                if rng.random_bool(0.25) {
                    *r += 1;
                }
            }
        }
    }
    let tasks = reqs
        .into_iter()
        .map(|r| (r, rng.random_range(1..=50)))
        .collect();
    ProblemInstance::new(types, caps, tasks).expect("fixture instance is valid")
}

/// The generated instance for one trial of a grid cell.
pub fn grid_instance(
    base: u64,
    n: u32,
    pct: u32,
    comp: CompositionSpec,
    trial: u32,
) -> Arc<ProblemInstance> {
    let seed = trial_seed(base, n, pct, comp, trial);
    Arc::new(
        generate(&GridCell::new(n, pct, comp, seed))
            .expect("valid cell")
            .instance,
    )
}
