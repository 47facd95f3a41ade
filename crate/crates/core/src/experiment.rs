//! Experiment grid orchestration, CSV export and summary statistics.
//!
//! Every (cell, trial) pair draws one instance from a seed derived with
//! [`trial_seed`] and runs each selected algorithm on that same instance.
//! Rows come back in grid order no matter how many worker threads ran them,
//! so the trial CSV is byte-identical across reruns. Wall-clock times are the
//! one nondeterministic metric and go to a separate file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::probgen::{generate, trial_seed, validate_cell_shape, CompositionSpec, GridCell};
use crate::runner::{run, Algorithm, RunOptions};

pub const TRIALS_FILE: &str = "trials.csv";
pub const WALL_TIMES_FILE: &str = "wall_times.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// A grid point without a seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellSpec {
    pub collective_size: u32,
    pub percent_tasks: u32,
    pub composition: CompositionSpec,
}

impl CellSpec {
    pub fn new(collective_size: u32, percent_tasks: u32, composition: CompositionSpec) -> Self {
        Self {
            collective_size,
            percent_tasks,
            composition,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.composition.validate()?;
        validate_cell_shape(self.collective_size, self.percent_tasks)
    }

    pub fn seeded(&self, base_seed: u64, trial: u32) -> GridCell {
        let seed = trial_seed(
            base_seed,
            self.collective_size,
            self.percent_tasks,
            self.composition,
            trial,
        );
        GridCell::new(
            self.collective_size,
            self.percent_tasks,
            self.composition,
            seed,
        )
    }

    /// Cells above this size take minutes to hours per trial.
    pub fn is_long_running(&self) -> bool {
        self.collective_size > 100
    }
}

/// The cross product of sizes, percentages and compositions, skipping invalid shapes.
pub fn grid(sizes: &[u32], percents: &[u32], compositions: &[CompositionSpec]) -> Vec<CellSpec> {
    let mut cells = Vec::new();
    for &n in sizes {
        for &p in percents {
            for &c in compositions {
                let cell = CellSpec::new(n, p, c);
                if cell.validate().is_ok() {
                    cells.push(cell);
                }
            }
        }
    }
    cells
}

/// Sizes 50 and 100, every composition, 10% and 50% tasks.
pub fn desk_grid() -> Vec<CellSpec> {
    grid(&[50, 100], &[10, 50], &CompositionSpec::ALL)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub algorithms: Vec<Algorithm>,
    pub cells: Vec<CellSpec>,
    pub trials: u32,
    pub seed: u64,
    pub options: RunOptions,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithms: Algorithm::ALL.to_vec(),
            cells: desk_grid(),
            trials: 25,
            seed: 1,
            options: RunOptions::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(json)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        if self.cells.is_empty() {
            return Err(Error::Config("no grid cells".into()));
        }
        for cell in &self.cells {
            cell.validate()?;
        }
        self.options.engine.validate()
    }

    pub fn row_count(&self) -> usize {
        self.cells.len() * self.trials as usize * self.algorithms.len()
    }
}

/// One row of the trial CSV. `wall_ms` lives in the sidecar file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub collective_size: u32,
    pub percent_tasks: u32,
    pub composition: CompositionSpec,
    pub trial: u32,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub instance_hash: String,
    pub mode: String,
    pub percent_utility: f64,
    pub utility: u64,
    pub iterations: u64,
    pub sim_time_us: u64,
    pub bytes_total: u64,
    pub stable_nash: bool,
    pub stable_pairwise: bool,
    pub timeout: bool,
    #[serde(skip)]
    pub wall_ms: u64,
}

impl TrialRecord {
    pub fn cell(&self) -> CellSpec {
        CellSpec::new(self.collective_size, self.percent_tasks, self.composition)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct WallTimeRow {
    collective_size: u32,
    percent_tasks: u32,
    composition: CompositionSpec,
    trial: u32,
    algorithm: Algorithm,
    wall_ms: u64,
}

/// SHA-256 of the instance's canonical JSON, hex encoded.
pub fn instance_hash(json: &str) -> String {
    hex::encode(Sha256::digest(json.as_bytes()))
}

fn run_trial(config: &ExperimentConfig, cell: CellSpec, trial: u32) -> Result<Vec<TrialRecord>> {
    let seeded = cell.seeded(config.seed, trial);
    let generated = generate(&seeded)?;
    let hash = instance_hash(&generated.instance.to_json()?);
    let instance = Arc::new(generated.instance);
    let mut options = config.options.clone();
    options.engine.network.seed = config.options.engine.network.seed.wrapping_add(seeded.seed);
    let mut rows = Vec::with_capacity(config.algorithms.len());
    for &algorithm in &config.algorithms {
        let result = run(algorithm, &instance, &options)?;
        if result.timeout {
            log::warn!("{algorithm} timed out on {cell:?} trial {trial}");
        }
        rows.push(TrialRecord {
            collective_size: cell.collective_size,
            percent_tasks: cell.percent_tasks,
            composition: cell.composition,
            trial,
            algorithm,
            seed: seeded.seed,
            instance_hash: hash.clone(),
            mode: result.mode.to_string(),
            percent_utility: result.percent_utility,
            utility: result.utility,
            iterations: result.iterations,
            sim_time_us: result.sim_time_us,
            bytes_total: result.bytes_total,
            stable_nash: result.stable_nash,
            stable_pairwise: result.stable_pairwise,
            timeout: result.timeout,
            wall_ms: result.wall_ms,
        });
    }
    Ok(rows)
}

/// Runs every cell and trial. The network seed is offset by each trial's
/// instance seed, so async trials see different delay draws. Rows are
/// ordered by cell, trial, then algorithm as configured.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    for cell in config.cells.iter().filter(|c| c.is_long_running()) {
        log::warn!("cell {cell:?} is long-running");
    }
    let jobs: Vec<(CellSpec, u32)> = config
        .cells
        .iter()
        .flat_map(|&c| (0..config.trials).map(move |t| (c, t)))
        .collect();
    let chunks: Vec<Vec<TrialRecord>> = jobs
        .par_iter()
        .map(|&(cell, trial)| run_trial(config, cell, trial))
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

pub fn records_to_csv(records: &[TrialRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn wall_times_csv(records: &[TrialRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(WallTimeRow {
            collective_size: r.collective_size,
            percent_tasks: r.percent_tasks,
            composition: r.composition,
            trial: r.trial,
            algorithm: r.algorithm,
            wall_ms: r.wall_ms,
        })?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes the trial CSV, the wall-time sidecar and the JSON summary into `dir`.
pub fn write_outputs(records: &[TrialRecord], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(TRIALS_FILE), records_to_csv(records)?)?;
    fs::write(dir.join(WALL_TIMES_FILE), wall_times_csv(records)?)?;
    let summary = summarize(records);
    fs::write(
        dir.join(SUMMARY_FILE),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(())
}

/// Reads a trial CSV and, when present next to it, the wall-time sidecar.
pub fn read_records(trials_csv: &Path) -> Result<Vec<TrialRecord>> {
    let mut records: Vec<TrialRecord> = csv::Reader::from_path(trials_csv)?
        .deserialize()
        .collect::<std::result::Result<_, _>>()?;
    let sidecar = trials_csv.with_file_name(WALL_TIMES_FILE);
    if sidecar.exists() {
        let mut walls = BTreeMap::new();
        for row in csv::Reader::from_path(&sidecar)?.deserialize() {
            let row: WallTimeRow = row?;
            let key = (
                row.collective_size,
                row.percent_tasks,
                row.composition,
                row.trial,
                row.algorithm,
            );
            walls.insert(key, row.wall_ms);
        }
        for r in &mut records {
            let key = (
                r.collective_size,
                r.percent_tasks,
                r.composition,
                r.trial,
                r.algorithm,
            );
            r.wall_ms = walls.get(&key).copied().unwrap_or(0);
        }
    }
    Ok(records)
}

/// Median, minimum and maximum of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    /// Even-length samples take the lower of the two middle values.
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Stat {
            median: v[(v.len() - 1) / 2],
            min: v[0],
            max: v[v.len() - 1],
        })
    }

    /// `median (min, max)` with up to two decimals and at least one.
    pub fn table_cell(&self) -> String {
        format!(
            "{} ({}, {})",
            fmt_value(self.median),
            fmt_value(self.min),
            fmt_value(self.max)
        )
    }
}

fn fmt_value(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub collective_size: u32,
    pub percent_tasks: u32,
    pub composition: CompositionSpec,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub timeouts: usize,
    pub nash_stable: usize,
    pub pairwise_stable: usize,
    pub percent_utility: Stat,
    pub iterations: Stat,
    pub sim_time_us: Stat,
    pub bytes_total: Stat,
    pub wall_ms: Stat,
    /// Percent utility in `median (min, max)` form.
    pub utility_table: String,
}

/// Per (cell, algorithm) statistics, ordered by cell then algorithm.
pub fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<(CellSpec, Algorithm), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.cell(), r.algorithm)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((cell, algorithm), rows)| {
            let stat = |f: &dyn Fn(&TrialRecord) -> f64| {
                let values: Vec<f64> = rows.iter().map(|r| f(r)).collect();
                Stat::of(&values).expect("groups are non-empty")
            };
            let percent_utility = stat(&|r| r.percent_utility);
            CellSummary {
                collective_size: cell.collective_size,
                percent_tasks: cell.percent_tasks,
                composition: cell.composition,
                algorithm,
                trials: rows.len(),
                timeouts: rows.iter().filter(|r| r.timeout).count(),
                nash_stable: rows.iter().filter(|r| r.stable_nash).count(),
                pairwise_stable: rows.iter().filter(|r| r.stable_pairwise).count(),
                percent_utility,
                iterations: stat(&|r| r.iterations as f64),
                sim_time_us: stat(&|r| r.sim_time_us as f64),
                bytes_total: stat(&|r| r.bytes_total as f64),
                wall_ms: stat(&|r| r.wall_ms as f64),
                utility_table: percent_utility.table_cell(),
            }
        })
        .collect()
}
