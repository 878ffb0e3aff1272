//! `spcdist`: fit, distance, outlier, clustering and benchmark commands.

mod commands;
mod options;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(spcdist_core::Error),
}

impl From<spcdist_core::Error> for CliError {
    fn from(e: spcdist_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "spcdist",
    version,
    about = "Smoothing-parameter-commutation distances for irregularly sampled curves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// key=value file; flags given on the command line win
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long, global = true)]
    pub out: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a smoothing spline per subject of a long-format CSV
    Fit {
        input: Option<String>,
        /// `auto` (REML) or a fixed smoothing parameter
        #[arg(long)]
        lambda: Option<String>,
        /// Also write m equispaced evaluations per subject to <out>.curves.csv
        #[arg(long)]
        grid: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Pairwise dissimilarity matrix
    Dist {
        input: Option<String>,
        /// spc, ss or eucl
        #[arg(long)]
        method: Option<String>,
        /// `auto` (REML) or one smoothing parameter shared by every subject
        #[arg(long)]
        lambda: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// kNN outlier scores from a matrix CSV
    Outliers {
        input: Option<String>,
        /// Neighbours per score
        #[arg(long)]
        k: Option<usize>,
        /// gap, gap:<ratio> or threshold:<t>
        #[arg(long)]
        mode: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// PAM clustering of a matrix CSV
    Cluster {
        input: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        /// Comma-separated ids removed before clustering
        #[arg(long)]
        exclude: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Simulation benchmark of the distance methods
    Simulate {
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated subset of eucl,ss,spc
        #[arg(long)]
        methods: Option<String>,
        #[arg(long)]
        series_per_cell: Option<usize>,
        #[arg(long)]
        grid_size: Option<usize>,
        /// Multiplier on the noise; 0 gives noise-free series
        #[arg(long)]
        noise_scale: Option<f64>,
        /// Also write per-replicate values here
        #[arg(long)]
        raw: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("SPCDIST_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Usage(format!("SPCDIST_THREADS={v} is not a positive integer"))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| commands::run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spcdist: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
