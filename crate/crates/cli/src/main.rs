use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use grapes_core::experiment::{
    read_records, run_experiment, summarize, write_outputs, ExperimentConfig, SUMMARY_FILE,
    TRIALS_FILE,
};
use grapes_core::probgen::generate;
use grapes_core::simnet::{EngineMode, LatencyModel};

const EXIT_CONFIG: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "grapes",
    version,
    about = "Coalition formation experiments on simulated robot networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the grid's problem instances as JSON files.
    Gen(GridArgs),
    /// Run every algorithm on every grid instance and write CSV and summary files.
    Run {
        #[command(flatten)]
        grid: GridArgs,
        /// Exit with status 3 if any run timed out.
        #[arg(long)]
        strict: bool,
    },
    /// Recompute the summary from an existing trials CSV.
    Summarize {
        /// Trials CSV, or the directory holding it.
        input: PathBuf,
        /// Where to write the JSON summary; defaults next to the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct GridArgs {
    /// Experiment config (JSON). Flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    mode: Option<EngineMode>,
    /// Per-delivery drop probability.
    #[arg(long)]
    loss: Option<f64>,
    /// Uniform latency bounds in microseconds, `lo:hi`.
    #[arg(long)]
    latency: Option<LatencyModel>,
    /// Coalition cap for both GRAPE variants.
    #[arg(long, value_enum)]
    cap: Option<Switch>,
}

/// Failure tagged with the exit status it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<grapes_core::Error>() {
            Some(grapes_core::Error::Config(_) | grapes_core::Error::Json(_)) => EXIT_CONFIG,
            _ => 1,
        };
        Failure { code, error }
    }
}

fn config_error(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        error: error.into(),
    }
}

impl GridArgs {
    fn load(&self) -> Result<ExperimentConfig, Failure> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))
                    .map_err(config_error)?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))
                    .map_err(config_error)?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(out) = &self.out {
            config.output_dir = Some(out.clone());
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(trials) = self.trials {
            config.trials = trials;
        }
        let engine = &mut config.options.engine;
        if let Some(mode) = self.mode {
            engine.mode = mode;
        }
        if let Some(loss) = self.loss {
            engine.network.loss = loss;
        }
        if let Some(latency) = self.latency {
            engine.network.latency = latency;
        }
        if let Some(cap) = self.cap {
            config.options.set_cap(matches!(cap, Switch::On));
        }
        config.validate().map_err(config_error)?;
        Ok(config)
    }
}

fn output_dir(config: &ExperimentConfig) -> PathBuf {
    config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn gen(args: &GridArgs) -> Result<(), Failure> {
    let config = args.load()?;
    let dir = output_dir(&config);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = 0;
    for cell in &config.cells {
        for trial in 0..config.trials {
            let generated =
                generate(&cell.seeded(config.seed, trial)).map_err(anyhow::Error::from)?;
            let name = format!(
                "{}_{}_{}-{}_{}.json",
                cell.collective_size,
                cell.percent_tasks,
                cell.composition.service_types,
                cell.composition.services_per_robot,
                trial
            );
            let path = dir.join(name);
            let json = generated.instance.to_json().map_err(anyhow::Error::from)?;
            fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
            written += 1;
        }
    }
    log::info!("wrote {written} instances to {}", dir.display());
    Ok(())
}

fn run(args: &GridArgs, strict: bool) -> Result<(), Failure> {
    let config = args.load()?;
    let dir = output_dir(&config);
    log::info!("running {} rows into {}", config.row_count(), dir.display());
    let records = run_experiment(&config).map_err(anyhow::Error::from)?;
    write_outputs(&records, &dir)
        .map_err(anyhow::Error::from)
        .with_context(|| format!("writing results to {}", dir.display()))?;
    for row in summarize(&records) {
        println!(
            "{:>5} {:>3}% {:>5} {:<13} utility {:<24} iterations {:>8} timeouts {}",
            row.collective_size,
            row.percent_tasks,
            row.composition.to_string(),
            row.algorithm.to_string(),
            row.utility_table,
            row.iterations.median,
            row.timeouts
        );
    }
    let timeouts = records.iter().filter(|r| r.timeout).count();
    if strict && timeouts > 0 {
        return Err(Failure {
            code: EXIT_TIMEOUT,
            error: anyhow::anyhow!("{timeouts} runs timed out"),
        });
    }
    Ok(())
}

fn summarize_file(input: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let csv = if input.is_dir() {
        input.join(TRIALS_FILE)
    } else {
        input.to_path_buf()
    };
    let records = read_records(&csv)
        .map_err(anyhow::Error::from)
        .with_context(|| format!("reading {}", csv.display()))?;
    let summary = summarize(&records);
    let json = serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)? + "\n";
    let target = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| csv.with_file_name(SUMMARY_FILE));
    fs::write(&target, json).with_context(|| format!("writing {}", target.display()))?;
    for row in &summary {
        println!(
            "{},{},{},{},{}",
            row.collective_size,
            row.percent_tasks,
            row.composition,
            row.algorithm,
            row.utility_table
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(args) => gen(args),
        Command::Run { grid, strict } => run(grid, *strict),
        Command::Summarize { input, out } => summarize_file(input, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
