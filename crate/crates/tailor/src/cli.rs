use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use tailor_core::domain::Pool;
use tailor_core::metrics::imbalance_ratios;
use tailor_core::rng::{stream, Stream};
use tailor_core::runner::Mode;
use tailor_core::simenv::generate_pool;

use crate::config::{load_config, RunConfig};
use crate::error::CliError;
use crate::output::{format_g9, metrics_csv, trace_jsonl, trace_records};
use crate::parallel::{run_experiment_parallel, thread_count};
use crate::pool_io::{read_pool, write_pool};

pub const METRICS_FILE: &str = "metrics.csv";
pub const TRACE_FILE: &str = "trace.jsonl";
pub const POOL_FILE: &str = "pool.jsonl";

#[derive(Debug, Parser)]
#[command(name = "tailor", version, about = "Bandit meta-selection over active learning algorithms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment and write metrics.csv and trace.jsonl.
    Run(RunArgs),
    /// Sample the [synthetic] pool of a config and write it as JSON lines.
    Generate(GenerateArgs),
    /// Print size, class counts and imbalance ratios of a pool.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Pool file; overrides the config's `pool` key and [synthetic] section.
    #[arg(long, value_name = "PATH")]
    pub pool: Option<PathBuf>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "N")]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output file; defaults to DIR/pool.jsonl.
    #[arg(long, value_name = "PATH")]
    pub pool: Option<PathBuf>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long, value_name = "PATH", required_unless_present = "config")]
    pub pool: Option<PathBuf>,
    /// Inspect the pool a config would run on.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => run(args, out),
        Command::Generate(args) => generate(args, out),
        Command::Inspect(args) => inspect(args, out),
    }
}

fn relative_to(config_path: &Path, p: &Path) -> PathBuf {
    match config_path.parent() {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

/// The pool a run uses: `--pool`, then the config's `pool` key (relative to
/// the config file), then its [synthetic] section.
fn resolve_pool(config: &RunConfig, config_path: &Path, flag: Option<&Path>) -> Result<Pool, CliError> {
    if let Some(p) = flag {
        return read_pool(p);
    }
    if let Some(p) = &config.pool {
        return read_pool(&relative_to(config_path, p));
    }
    match &config.synthetic {
        Some(spec) => Ok(generate_pool(spec, &mut stream(config.experiment.seed, 0, Stream::PoolGeneration))?),
        None => Err(CliError::Config("no pool: pass --pool, set `pool`, or add a [synthetic] section".into())),
    }
}

fn run(args: RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut config = load_config(&args.config)?;
    if let Some(s) = args.seed {
        config.experiment.seed = s;
    }
    if let Some(t) = args.trials {
        config.experiment.trials = t;
    }
    config.experiment.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let (pool, task) = match &config.experiment.mode {
        Mode::ActiveLearning(_) => {
            let pool = resolve_pool(&config, &args.config, args.pool.as_deref())?;
            let task = pool.task();
            (Some(pool), task)
        }
        Mode::PureBandit(b) => (None, b.task),
    };
    let (outcomes, rows) = run_experiment_parallel(&config.experiment, pool.as_ref(), thread_count())?;
    let policy = config.experiment.policy.name();
    let csv = metrics_csv(policy, &rows);
    let trace = trace_jsonl(&trace_records(&outcomes, policy, task));
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let metrics_path = args.out.join(METRICS_FILE);
    let trace_path = args.out.join(TRACE_FILE);
    std::fs::write(&metrics_path, csv).map_err(|e| CliError::io(&metrics_path, e))?;
    std::fs::write(&trace_path, trace).map_err(|e| CliError::io(&trace_path, e))?;
    writeln!(
        out,
        "{} trials x {} rounds with policy {policy}; wrote {} and {}",
        outcomes.len(),
        rows.len(),
        metrics_path.display(),
        trace_path.display()
    )
    .map_err(stdout_err)
}

fn generate(args: GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut config = load_config(&args.config)?;
    if let Some(s) = args.seed {
        config.experiment.seed = s;
    }
    let spec = config
        .synthetic
        .as_ref()
        .ok_or_else(|| CliError::Config("generate needs a [synthetic] section".into()))?;
    let pool = generate_pool(spec, &mut stream(config.experiment.seed, 0, Stream::PoolGeneration))?;
    let path = match args.pool {
        Some(p) => p,
        None => {
            std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
            args.out.join(POOL_FILE)
        }
    };
    write_pool(&pool, &path)?;
    writeln!(out, "wrote {} examples to {}", pool.len(), path.display()).map_err(stdout_err)
}

fn inspect(args: InspectArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let pool = match (&args.pool, &args.config) {
        (Some(p), _) => read_pool(p)?,
        (None, Some(c)) => {
            let mut config = load_config(c)?;
            if let Some(s) = args.seed {
                config.experiment.seed = s;
            }
            resolve_pool(&config, c, None)?
        }
        (None, None) => return Err(CliError::Config("inspect needs --pool or --config".into())),
    };
    out.write_all(pool_summary(&pool)?.as_bytes()).map_err(stdout_err)
}

/// Multi-line `key: value` summary printed by `inspect`.
pub fn pool_summary(pool: &Pool) -> Result<String, CliError> {
    let ratios = imbalance_ratios(pool)?;
    let counts: Vec<String> = pool.class_sizes().iter().map(|c| c.to_string()).collect();
    let mut s = format!(
        "task: {}\nN: {}\nK: {}\nd: {}\nclass_counts: {}\nclass_imbalance: {}\n",
        pool.task().name(),
        pool.len(),
        pool.classes(),
        pool.dim(),
        counts.join(","),
        format_g9(ratios.class_imbalance)
    );
    if let Some(b) = ratios.binary_imbalance {
        s.push_str(&format!("binary_imbalance: {}\n", format_g9(b)));
    }
    Ok(s)
}
