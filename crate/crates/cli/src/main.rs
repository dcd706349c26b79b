//! `thinktank`: the forecasting pipeline, one stage per subcommand.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use thinktank_core::dataset::SourceFormat;
use thinktank_core::InnerStrategy;

use commands::{Overrides, Run};
use config::RunConfig;
use error::{CliError, EXIT_USAGE};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  usage error or unknown command
  2  configuration error (invalid or missing config, missing stage output, bad strategy parameters)
  3  data error (malformed or inconsistent input data)
  4  expert backend or network error";

#[derive(Debug, Parser)]
#[command(name = "thinktank", version, about = "Multi-expert event forecasting pipeline", after_help = EXIT_CODES)]
struct Cli {
    /// JSON run configuration (paths, dataset options, panel, router, strategy, seeds).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Leader strategy, overriding the config's.
    #[arg(long, global = true, value_parser = ["routing", "majority", "vanilla_bon", "weighted_bon", "elite"])]
    strategy: Option<String>,
    /// Number of elite experts (elite strategy only).
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Aggregation inside the elite (majority, vanilla_bon, weighted_bon).
    #[arg(long, global = true, value_parser = InnerStrategy::from_str)]
    inner: Option<InnerStrategy>,
    /// Comma-separated evaluation seeds, overriding seeds.eval.
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads for query evaluation (default: number of processors).
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Event source format (tsv or jsonl), overriding the config's.
    #[arg(long, global = true, value_parser = SourceFormat::from_str)]
    format: Option<SourceFormat>,
    /// Knowledge cutoff YYYY-MM-DD; events on or before it are training data.
    #[arg(long, global = true)]
    cutoff: Option<chrono::NaiveDate>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic corpus to the configured events path.
    GenCorpus,
    /// Validate and normalize the event source; write events, rejects and registry.
    Ingest,
    /// De-duplicate, form sequences, partition by country and split at the cutoff.
    Prepare,
    /// Materialize the mock expert panel described by panel_spec.
    GenPanel,
    /// Query the panel on training queries and record which experts were correct.
    GenSupervision,
    /// Train the router on the supervision set.
    TrainRouter {
        /// Write a Gaussian-initialized router that skips training instead.
        #[arg(long)]
        untrained: bool,
    },
    /// Forecast one query and print the aggregated forecast as JSON.
    Forecast {
        /// Id of a prepared query.
        #[arg(long, conflicts_with = "query")]
        query_id: Option<String>,
        /// JSON file holding a query.
        #[arg(long)]
        query: Option<PathBuf>,
    },
    /// Evaluate a strategy on the test queries; write JSON and CSV reports.
    Evaluate {
        /// Use the untrained router for routing or elite strategies.
        #[arg(long)]
        untrained: bool,
    },
    /// Sweep elite k over 1..=N for each seed; write per-seed and mean CSV curves.
    SweepK,
    /// Render CSV tables and a summary from stored JSON reports.
    Report {
        /// Report JSON files (default: every report_*.json in the output dir).
        #[arg(long)]
        input: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli.config.ok_or_else(|| CliError::Config("--config <PATH> is required".into()))?;
    let run = Run {
        config: RunConfig::load(&path)?,
        overrides: Overrides {
            strategy: cli.strategy,
            k: cli.k,
            inner: cli.inner,
            seeds: cli.seeds,
            parallelism: cli.parallelism,
            format: cli.format,
            cutoff: cli.cutoff,
        },
    };
    match cli.command {
        Command::GenCorpus => commands::gen_corpus(&run),
        Command::Ingest => commands::ingest(&run),
        Command::Prepare => commands::prepare(&run),
        Command::GenPanel => commands::gen_panel(&run),
        Command::GenSupervision => commands::gen_supervision(&run),
        Command::TrainRouter { untrained } => commands::train(&run, untrained),
        Command::Forecast { query_id, query } => commands::forecast(&run, query_id.as_deref(), query.as_deref()),
        Command::Evaluate { untrained } => commands::evaluate(&run, untrained),
        Command::SweepK => commands::sweep(&run),
        Command::Report { input } => commands::report(&run, &input),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("thinktank: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
