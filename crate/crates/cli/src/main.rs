mod commands;
mod config;
mod error;
mod manifest;
mod specs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::BackendKind;

#[derive(Debug, Parser)]
#[command(name = "nqp", version, about = "Neural quantum propagators for Lindblad dynamics")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Run configuration (JSON); defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides config and $NQP_OUTPUT_DIR).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    /// NQP1 checkpoint, required by the fno backend.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample GUE initial states and write RK4 trajectories.
    GenData {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        n_train: Option<usize>,
        #[arg(long)]
        n_val: Option<usize>,
        /// Dataset file (default: <out-dir>/dataset.nqd).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the neural propagator on a dataset.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        physics_weight: Option<f64>,
        #[arg(long)]
        onthefly_samples: Option<usize>,
        #[arg(long)]
        checkpoint_every: Option<usize>,
        /// Continue from the checkpoint and optimizer state in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Per-sample relative errors of a checkpoint on a dataset's validation split.
    Validate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Site populations over chained windows.
    Propagate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        backend: BackendArgs,
        /// `site:k`, `mixed`, or a JSON matrix file.
        #[arg(long, default_value = "site:1")]
        state: String,
        #[arg(long, default_value_t = 50)]
        windows: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// First- or second-order time-correlation function.
    Tcf {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        order: u8,
        #[arg(long, default_value = "site:1")]
        state: String,
        /// `hopping`, `identity`, or a JSON matrix file.
        #[arg(long, default_value = "hopping")]
        operator: String,
        /// Overrides the config's axes for the chosen order.
        #[arg(long)]
        t1_windows: Option<usize>,
        #[arg(long)]
        t1_stride: Option<usize>,
        #[arg(long)]
        t2_windows: Option<usize>,
        #[arg(long)]
        t2_stride: Option<usize>,
        /// Second-order grid over 40 windows on both axes.
        #[arg(long)]
        full_grid: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Imaginary part of the Fourier transform of a TCF file.
    Spectrum {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scale intensities to unit maximum magnitude.
        #[arg(long)]
        normalize: bool,
    },
    /// Print the default config or describe checkpoint/dataset files.
    Info {
        #[arg(long)]
        default_config: bool,
        /// Print the effective configuration after parsing this file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("error[E_USAGE]: {first}");
            return ExitCode::from(2);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error[E_USAGE]: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error[E_CONFIG]: cannot size thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
