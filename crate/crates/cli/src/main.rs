use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hybrid_precoding::harness::{
    named_scenarios, parse_config, run_with, scenario, write_csv, write_json, RunOptions,
    RunResult, ScenarioConfig,
};

#[derive(Parser)]
#[command(
    name = "hpsim",
    version,
    about = "Monte Carlo simulator for clustering-based hybrid precoding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and export the aggregated metrics.
    Run(RunArgs),
    /// Check a configuration file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the built-in named scenarios.
    Scenarios {
        /// Write every built-in configuration as a TOML file into this directory.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (TOML).
    #[arg(
        long,
        required_unless_present = "scenario",
        conflicts_with = "scenario"
    )]
    config: Option<PathBuf>,
    /// Built-in scenario name, e.g. fig2.
    #[arg(long)]
    scenario: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Trial count, overriding the configuration.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn read_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("invalid configuration {}", path.display()))
}

fn run(args: RunArgs) -> Result<()> {
    let mut configs = match (&args.config, &args.scenario) {
        (Some(path), None) => vec![read_config(path)?],
        (None, Some(name)) => scenario(name)?.configs,
        _ => bail!("exactly one of --config and --scenario is required"),
    };
    for config in &mut configs {
        if let Some(seed) = args.seed {
            config.master_seed = seed;
        }
        if let Some(trials) = args.trials {
            config.trials = trials;
        }
    }
    if args.threads == Some(0) {
        bail!("--threads must be at least 1");
    }
    let options = RunOptions {
        threads: args.threads,
    };

    let mut results = Vec::with_capacity(configs.len());
    for config in &configs {
        let start = Instant::now();
        let result = run_with(config, &options)
            .with_context(|| format!("scenario `{}` failed", config.name))?;
        eprintln!(
            "{}: {} records from {} trials in {:.1}s",
            config.name,
            result.records.len(),
            config.trials,
            start.elapsed().as_secs_f64()
        );
        results.push(result);
    }

    match &args.out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut out = BufWriter::new(file);
            write_results(&results, args.format, args.scenario.is_some(), &mut out)?;
            out.flush()?;
        }
        None => {
            let mut out = io::stdout().lock();
            write_results(&results, args.format, args.scenario.is_some(), &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

/// One CSV table for all results; JSON is a single result for a config file
/// and an array for a built-in scenario.
fn write_results<W: Write>(
    results: &[RunResult],
    format: Format,
    many: bool,
    out: &mut W,
) -> Result<()> {
    match format {
        Format::Csv => write_csv(results.iter().flat_map(|r| &r.records), &mut *out)?,
        Format::Json if many => serde_json::to_writer_pretty(&mut *out, results)?,
        Format::Json => write_json(&results[0], &mut *out)?,
    }
    if matches!(format, Format::Json) {
        writeln!(out)?;
    }
    Ok(())
}

fn validate(path: &Path) -> Result<()> {
    let config = read_config(path)?;
    let records =
        config.q_bits.len() * config.n_rf.len() * config.schemes.len() * config.snr_db.len();
    writeln!(
        io::stdout(),
        "{}: valid, {} trials, {records} records",
        config.name,
        config.trials
    )?;
    Ok(())
}

fn scenarios(dump: Option<&Path>) -> Result<()> {
    if let Some(dir) = dump {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut out = io::stdout().lock();
    for s in named_scenarios() {
        writeln!(out, "{:<6} {}", s.name, s.description)?;
        for config in &s.configs {
            writeln!(out, "       {}", config.name)?;
            if let Some(dir) = dump {
                let path = dir.join(format!("{}.toml", config.name));
                fs::write(&path, config.to_toml()?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Validate { config } => validate(&config),
        Command::Scenarios { dump } => scenarios(dump.as_deref()),
    }
}
