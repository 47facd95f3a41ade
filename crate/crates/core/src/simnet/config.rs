use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Topology {
    #[default]
    FullyConnected,
}

/// How a broadcast is charged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CountingMode {
    /// One copy per send.
    #[default]
    OncePerSend,
    /// One copy per receiver.
    PerReceiver,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineMode {
    #[default]
    Sync,
    Async,
}

impl fmt::Display for EngineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineMode::Sync => "sync",
            EngineMode::Async => "async",
        })
    }
}

impl FromStr for EngineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sync" => Ok(EngineMode::Sync),
            "async" => Ok(EngineMode::Async),
            _ => Err(Error::Config(format!("unknown engine mode {s:?}"))),
        }
    }
}

/// Uniform integer latency in `[lo_us, hi_us]` simulated microseconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub lo_us: u64,
    pub hi_us: u64,
}

impl LatencyModel {
    pub fn mean_us(&self) -> u64 {
        (self.lo_us + self.hi_us) / 2
    }
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            lo_us: 1_000,
            hi_us: 10_000,
        }
    }
}

impl FromStr for LatencyModel {
    type Err = Error;

    /// Parses `lo:hi` in microseconds.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("latency {s:?} is not lo:hi microseconds"));
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lo = lo.trim().parse().map_err(|_| bad())?;
        let hi = hi.trim().parse().map_err(|_| bad())?;
        Ok(Self {
            lo_us: lo,
            hi_us: hi,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub topology: Topology,
    pub latency: LatencyModel,
    /// Per-delivery drop probability.
    pub loss: f64,
    pub seed: u64,
    pub counting: CountingMode,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            topology: Topology::FullyConnected,
            latency: LatencyModel::default(),
            loss: 0.0,
            seed: 0,
            counting: CountingMode::OncePerSend,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latency.lo_us > self.latency.hi_us {
            return Err(Error::Config(format!(
                "latency lower bound {} exceeds upper bound {}",
                self.latency.lo_us, self.latency.hi_us
            )));
        }
        if !(0.0..1.0).contains(&self.loss) {
            return Err(Error::Config(format!(
                "loss probability {} not in [0, 1)",
                self.loss
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub mode: EngineMode,
    pub network: NetworkConfig,
    /// Sync engine iteration cap.
    pub max_iterations: u64,
    pub sim_time_limit_us: u64,
    pub wall_time_limit_ms: u64,
    /// Timer period and sync tick; defaults to the mean latency (at least 1 us).
    pub timer_period_us: Option<u64>,
    /// Async only: timers at phase zero and no activations on arrival.
    pub serialized: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            mode: EngineMode::Sync,
            network: NetworkConfig::default(),
            max_iterations: 1_000_000,
            sim_time_limit_us: 3_600_000_000,
            wall_time_limit_ms: 3_600_000,
            timer_period_us: None,
            serialized: false,
        }
    }
}

impl EngineConfig {
    pub fn sync() -> Self {
        Self::default()
    }

    pub fn asynchronous(network: NetworkConfig) -> Self {
        Self {
            mode: EngineMode::Async,
            network,
            ..Self::default()
        }
    }

    /// Zero latency, no loss, serialized activations.
    pub fn degenerate_async(seed: u64) -> Self {
        Self {
            mode: EngineMode::Async,
            network: NetworkConfig {
                latency: LatencyModel { lo_us: 0, hi_us: 0 },
                seed,
                ..NetworkConfig::default()
            },
            serialized: true,
            ..Self::default()
        }
    }

    pub fn period_us(&self) -> u64 {
        self.timer_period_us
            .unwrap_or_else(|| self.network.latency.mean_us())
            .max(1)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        if self.timer_period_us == Some(0) {
            return Err(Error::Config("timer period must be positive".into()));
        }
        Ok(())
    }
}
