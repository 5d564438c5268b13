use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "csiwave", version, about = "Wi-Fi CSI activity recognition with a wavelet CNN")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Pipeline configuration (TOML). Defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DataArg {
    /// Dataset directory with a manifest. The configured synthetic dataset
    /// is generated when omitted.
    #[arg(long, short)]
    data: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Part {
    Train,
    Test,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Binary,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the configured synthetic dataset to a directory.
    Synth {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "binary")]
        format: Format,
    },
    /// Validate recording files and collect them into a dataset directory.
    Ingest {
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "binary")]
        format: Format,
        /// Activity class id (0-15) overriding the files' own labels.
        #[arg(long)]
        label: Option<u8>,
        #[arg(long)]
        subject: Option<String>,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Run fusion, filtering and segmentation; report the detected segments.
    Preprocess {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        data: DataArg,
        /// Segment table (CSV); printed to stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Train the wavelet CNN and write a checkpoint plus its loss curve.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        data: DataArg,
        #[arg(long, short)]
        out: PathBuf,
        /// Loss curve CSV; defaults to the checkpoint path with a `.loss.csv` extension.
        #[arg(long)]
        loss_curve: Option<PathBuf>,
        /// Train on every example instead of the training part of the split.
        #[arg(long)]
        all: bool,
        /// Train the plain CNN baseline instead.
        #[arg(long)]
        baseline: bool,
    },
    /// Evaluate a checkpoint and write metrics.json, confusion.csv and confusion.svg.
    Eval {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        data: DataArg,
        #[arg(long, short)]
        model: PathBuf,
        /// Output directory.
        #[arg(long, short, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: Part,
    },
    /// Classify individual recording files.
    Predict {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, short)]
        model: PathBuf,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Rerun the experiment once per principal-component subset.
    ComparePcs {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        data: DataArg,
        /// One-based component indices, e.g. `--indices 1,2 --indices 2,3`.
        #[arg(long, required = true, value_parser = parse_indices)]
        indices: Vec<Vec<usize>>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Full experiment: train, evaluate against the baselines, write every report.
    Run {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        data: DataArg,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Print the default configuration.
    Config,
}

fn parse_indices(s: &str) -> Result<Vec<usize>, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if v.contains(&0) {
        return Err("component indices are one-based".into());
    }
    Ok(v)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
