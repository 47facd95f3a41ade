//! Runs one algorithm on one instance under one engine and scores the result.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grape::{GrapeAgent, GrapeConfig};
use crate::model::{percent_utility, structure_utility, Partition, ProblemInstance};
use crate::sda::{auction_complete, build_market, market_outcome, SdaConfig};
use crate::simnet::{run_async, run_sync, EngineConfig, EngineMode, EngineOutcome, Node};
use crate::verify::{is_nash_stable, is_pairwise_stable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "GRAPE_S")]
    GrapeS,
    #[serde(rename = "PAIR_GRAPE_S")]
    PairGrapeS,
    #[serde(rename = "SDA")]
    Sda,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::GrapeS, Algorithm::PairGrapeS, Algorithm::Sda];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GrapeS => "GRAPE_S",
            Algorithm::PairGrapeS => "PAIR_GRAPE_S",
            Algorithm::Sda => "SDA",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// Per-algorithm settings plus the engine to run them on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    pub engine: EngineConfig,
    pub grape_s: GrapeConfig,
    pub pair_grape_s: GrapeConfig,
    pub sda: SdaConfig,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            engine: EngineConfig::default(),
            grape_s: GrapeConfig::grape_s(),
            pair_grape_s: GrapeConfig::pair_grape_s(),
            sda: SdaConfig::default(),
        }
    }
}

impl RunOptions {
    pub fn with_engine(engine: EngineConfig) -> Self {
        Self {
            engine,
            ..Self::default()
        }
    }

    /// Forces the coalition cap on or off for both GRAPE variants.
    pub fn set_cap(&mut self, cap: bool) {
        self.grape_s.cap = cap;
        self.pair_grape_s.cap = cap;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    pub mode: EngineMode,
    pub iterations: u64,
    pub sim_time_us: u64,
    pub wall_ms: u64,
    pub bytes_total: u64,
    pub bytes_by_class: BTreeMap<String, u64>,
    pub percent_utility: f64,
    pub stable_nash: bool,
    pub stable_pairwise: bool,
    pub timeout: bool,
    #[serde(skip)]
    pub utility: u64,
    /// Auction rounds (SDA only).
    #[serde(skip)]
    pub auction_rounds: Option<u64>,
    #[serde(skip)]
    pub protocol_errors: u64,
    #[serde(skip)]
    pub engine: Option<EngineOutcome>,
    #[serde(skip)]
    pub partition: Partition,
}

fn execute<N: Node, F: FnMut(&[N]) -> bool>(
    nodes: &mut [N],
    engine: &EngineConfig,
    oracle: F,
) -> EngineOutcome {
    match engine.mode {
        EngineMode::Sync => run_sync(nodes, engine, oracle),
        EngineMode::Async => run_async(nodes, engine, oracle),
    }
}

/// All robots hold the same belief and it is stable for the algorithm.
pub fn grape_consensus(agents: &[GrapeAgent], instance: &ProblemInstance) -> Option<Partition> {
    let first = agents.first()?.state();
    let agreed = agents.iter().all(|a| {
        let s = a.state();
        s.key() == first.key()
            && (Arc::ptr_eq(s.belief(), first.belief()) || s.belief() == first.belief())
    });
    if !agreed {
        return None;
    }
    let cfg = agents[0].config();
    let belief = first.belief();
    let stable = if cfg.pairwise {
        is_pairwise_stable(belief, instance).is_stable()
    } else {
        is_nash_stable(belief, instance, cfg.cap).is_stable()
    };
    stable.then(|| (**belief).clone())
}

fn leading_belief(agents: &[GrapeAgent]) -> Option<Partition> {
    agents
        .iter()
        .max_by_key(|a| a.state().key())
        .map(|a| (**a.state().belief()).clone())
}

/// Runs `algorithm` on `instance` and verifies the resulting partition.
pub fn run(
    algorithm: Algorithm,
    instance: &Arc<ProblemInstance>,
    options: &RunOptions,
) -> Result<RunResult> {
    options.engine.validate()?;
    let (outcome, partition, cap, auction_rounds, protocol_errors) = match algorithm {
        Algorithm::GrapeS | Algorithm::PairGrapeS => {
            let config = if algorithm == Algorithm::GrapeS {
                &options.grape_s
            } else {
                &options.pair_grape_s
            };
            let mut agents = GrapeAgent::collective(instance, config);
            let outcome = execute(&mut agents, &options.engine, |a| {
                a.is_empty() || grape_consensus(a, instance).is_some()
            });
            let partition = leading_belief(&agents).unwrap_or_else(|| Partition::all_void(0));
            let errors = agents.iter().map(GrapeAgent::protocol_errors).sum();
            (outcome, partition, config.cap, None, errors)
        }
        Algorithm::Sda => {
            let mut nodes = build_market(instance, &options.sda)?;
            let outcome = execute(&mut nodes, &options.engine, auction_complete);
            let (partition, rounds) = market_outcome(&nodes);
            (outcome, partition, false, Some(rounds), 0)
        }
    };
    Ok(RunResult {
        mode: outcome.mode,
        iterations: outcome.iterations,
        sim_time_us: outcome.sim_time_us,
        wall_ms: outcome.wall_ms,
        bytes_total: outcome.bytes.total(),
        bytes_by_class: outcome.bytes.by_class(),
        percent_utility: percent_utility(instance, &partition)?,
        stable_nash: is_nash_stable(&partition, instance, cap).is_stable(),
        stable_pairwise: is_pairwise_stable(&partition, instance).is_stable(),
        timeout: outcome.timeout,
        utility: structure_utility(instance, &partition),
        auction_rounds,
        protocol_errors,
        engine: Some(outcome),
        partition,
    })
}
