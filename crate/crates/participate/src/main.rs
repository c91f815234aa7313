//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for runtime failures.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use participate::harness::{self, metrics, plot, ExperimentConfig, ExperimentId};

#[derive(Parser)]
#[command(
    name = "participate",
    about = "Reward-share participation markets for multi-agent social dilemmas",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment preset over several seeded runs.
    Run(RunArgs),
    /// Render SVG charts (mean +/- band across seeds) from a result directory.
    Plot(PlotArgs),
    /// Print the experiment preset table.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment id; see `participate list`.
    #[arg(long = "exp")]
    exp: String,
    /// Number of independent runs.
    #[arg(long)]
    seeds: Option<u32>,
    /// Episodes per run.
    #[arg(long)]
    episodes: Option<u32>,
    /// Result directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Max concurrent runs.
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed; run i draws from stream i of this seed.
    #[arg(long = "master-seed")]
    master_seed: Option<u64>,
    /// Config file of key=value lines ('#' comments allowed).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline key=value override; repeatable, applied after --config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct PlotArgs {
    /// Result directory containing metrics.csv; charts are written there.
    #[arg(long = "in")]
    input: PathBuf,
    /// Render only this metric.
    #[arg(long)]
    metric: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are not usage errors.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(String),
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => run_command(args),
        Command::Plot(args) => plot_command(args),
        Command::List => {
            list_command();
            Ok(())
        }
    }
}

fn run_command(args: RunArgs) -> Result<(), CliError> {
    let experiment: ExperimentId = args
        .exp
        .parse()
        .map_err(|e| CliError::Usage(format!("{e}")))?;
    let mut config = ExperimentConfig::new(experiment, &args.out);

    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
        config
            .apply_config_text(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    }
    for pair in &args.set {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got '{pair}'")))?;
        config
            .apply_override(key.trim(), value.trim())
            .map_err(|e| CliError::Usage(format!("{e}")))?;
    }
    if let Some(seeds) = args.seeds {
        config.seeds = seeds;
    }
    if let Some(episodes) = args.episodes {
        config.episodes = episodes;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    if let Some(master_seed) = args.master_seed {
        config.master_seed = master_seed;
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(format!("{e}")))?;

    let output = harness::run(&config).map_err(|e| CliError::Runtime(format!("{e}")))?;
    println!(
        "{}: {} seeds x {} episodes -> {}",
        config.experiment,
        config.seeds,
        config.episodes,
        output.dir.display()
    );
    Ok(())
}

fn plot_command(args: PlotArgs) -> Result<(), CliError> {
    let csv_path = args.input.join("metrics.csv");
    let text = fs::read_to_string(&csv_path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", csv_path.display())))?;
    let rows = metrics::parse_metrics_csv(&text)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", csv_path.display())))?;
    let written = plot::render_plots(&rows, &args.input, args.metric.as_deref())
        .map_err(|e| CliError::Runtime(format!("{e}")))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn list_command() {
    println!("{:<18} {:>6}  description", "id", "agents");
    for info in harness::list_experiments() {
        println!(
            "{:<18} {:>6}  {}",
            info.id.name(),
            info.agents,
            info.description
        );
    }
}
