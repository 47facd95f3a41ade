//! Random achievable missions.
//!
//! Robots are split into one balanced group per task. Each robot in a group
//! picks one of its own services at random and contributes that service to the
//! group task's requirement vector. The picks form a hidden assignment that
//! satisfies every task with exactly the whole collective, so every generated
//! instance has a known optimum equal to its total utility.
//!
//! # Seeding
//!
//! Instances are drawn from `ChaCha8Rng::seed_from_u64(cell.seed)`. Experiment
//! grids derive per-trial seeds with [`trial_seed`], which folds the base seed,
//! the cell coordinates and the trial index through SplitMix64. Trial `k` of any
//! cell can therefore be regenerated on its own.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, Partition, ProblemInstance, ServiceId};

pub const UTILITY_RANGE: std::ops::RangeInclusive<u32> = 1..=50;
pub const PERCENT_TASK_CHOICES: [u32; 3] = [1, 10, 50];

/// Service types in the collective and services each robot offers, written `types:perRobot`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompositionSpec {
    pub service_types: u32,
    pub services_per_robot: u32,
}

impl CompositionSpec {
    pub const FIVE_ONE: Self = Self::new(5, 1);
    pub const FIVE_FIVE: Self = Self::new(5, 5);
    pub const TEN_ONE: Self = Self::new(10, 1);
    pub const TEN_FIVE: Self = Self::new(10, 5);
    pub const ALL: [Self; 4] = [
        Self::FIVE_ONE,
        Self::FIVE_FIVE,
        Self::TEN_ONE,
        Self::TEN_FIVE,
    ];

    pub const fn new(service_types: u32, services_per_robot: u32) -> Self {
        Self {
            service_types,
            services_per_robot,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.service_types == 0 || self.service_types as usize > crate::model::MAX_SERVICE_TYPES
        {
            return Err(Error::Config(format!(
                "service types {} out of range",
                self.service_types
            )));
        }
        if self.services_per_robot == 0 || self.services_per_robot > self.service_types {
            return Err(Error::Config(format!(
                "services per robot {} must lie in 1..={}",
                self.services_per_robot, self.service_types
            )));
        }
        Ok(())
    }
}

impl fmt::Display for CompositionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.service_types, self.services_per_robot)
    }
}

impl FromStr for CompositionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (types, per) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("composition {s:?} is not types:perRobot")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| Error::Config(format!("composition {s:?} is not types:perRobot")))
        };
        let spec = Self::new(parse(types)?, parse(per)?);
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for CompositionSpec {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CompositionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One point of the experiment grid plus the seed of the instance drawn there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridCell {
    pub collective_size: u32,
    pub percent_tasks: u32,
    pub composition: CompositionSpec,
    pub seed: u64,
}

impl GridCell {
    pub fn new(
        collective_size: u32,
        percent_tasks: u32,
        composition: CompositionSpec,
        seed: u64,
    ) -> Self {
        Self {
            collective_size,
            percent_tasks,
            composition,
            seed,
        }
    }

    pub fn task_count(&self) -> u32 {
        self.percent_tasks * self.collective_size / 100
    }

    pub fn validate(&self) -> Result<()> {
        self.composition.validate()?;
        validate_cell_shape(self.collective_size, self.percent_tasks)
    }
}

/// Checks the (size, percent tasks) pair: at least one task, and 1% tasks only above 100 robots.
pub fn validate_cell_shape(collective_size: u32, percent_tasks: u32) -> Result<()> {
    if !PERCENT_TASK_CHOICES.contains(&percent_tasks) {
        return Err(Error::Config(format!(
            "percent tasks {percent_tasks} not one of {PERCENT_TASK_CHOICES:?}"
        )));
    }
    if percent_tasks * collective_size / 100 < 1 {
        return Err(Error::Config(format!(
            "{percent_tasks}% of {collective_size} robots is less than one task"
        )));
    }
    if percent_tasks == 1 && collective_size <= 100 {
        return Err(Error::Config(
            "1% tasks requires more than 100 robots".into(),
        ));
    }
    Ok(())
}

/// A generated instance together with the assignment that proves it achievable.
#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub instance: ProblemInstance,
    pub hidden_assignment: Partition,
}

pub fn generate(cell: &GridCell) -> Result<GeneratedInstance> {
    cell.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cell.seed);

    let n = cell.collective_size as usize;
    let m = cell.task_count() as usize;
    let types = cell.composition.service_types as usize;
    let per_robot = cell.composition.services_per_robot as usize;

    let mut capabilities = Vec::with_capacity(n);
    let mut services_of = Vec::with_capacity(n);
    for _ in 0..n {
        let mut picked: Vec<usize> = index::sample(&mut rng, types, per_robot).into_vec();
        picked.sort_unstable();
        let mut bits = vec![0u32; types];
        for &s in &picked {
            bits[s] = 1;
        }
        capabilities.push(bits);
        services_of.push(picked);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    // The first n % m groups get one extra robot.
    let base = n / m;
    let extra = n % m;
    let mut requirements = vec![vec![0u32; types]; m];
    let mut hidden = vec![Assignment::Void; n];
    let mut cursor = 0;
    for (task, requirement) in requirements.iter_mut().enumerate() {
        let size = base + usize::from(task < extra);
        for &robot in &order[cursor..cursor + size] {
            let options = &services_of[robot];
            let service = options[rng.random_range(0..options.len())];
            requirement[service] += 1;
            hidden[robot] = Assignment::slot(task as u32, service as ServiceId);
        }
        cursor += size;
    }

    let tasks = requirements
        .into_iter()
        .map(|req| (req, rng.random_range(UTILITY_RANGE)))
        .collect();
    let instance = ProblemInstance::new(types, capabilities, tasks)?;
    Ok(GeneratedInstance {
        instance,
        hidden_assignment: Partition::from_assignments(hidden),
    })
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` of the cell `(n, pct, composition)` under `base_seed`.
pub fn trial_seed(
    base_seed: u64,
    collective_size: u32,
    percent_tasks: u32,
    composition: CompositionSpec,
    trial: u32,
) -> u64 {
    let mut state = base_seed;
    let mut out = splitmix64(&mut state);
    for word in [
        u64::from(collective_size),
        u64::from(percent_tasks),
        u64::from(composition.service_types),
        u64::from(composition.services_per_robot),
        u64::from(trial),
    ] {
        state ^= word.wrapping_add(out);
        out = splitmix64(&mut state);
    }
    out
}
