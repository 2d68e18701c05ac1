//! `scma-ntn`: channel generation, CNN training, BLER sweeps, throughput and
//! complexity reports for uplink SCMA over a LEO satellite link.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scma_ntn::coding::RatePoint;
use scma_ntn::harness::ReceiverKind;
use scma_ntn::neural::Profile;

use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "scma-ntn", version, about)]
struct Cli {
    /// TOML or JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides `output_dir`.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Writes the train and test channel datasets.
    GenChannel {
        #[arg(long)]
        symbols: Option<usize>,
    },
    /// Trains the CNN receiver on the train channel dataset.
    Train {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        minibatches: Option<usize>,
        #[arg(long)]
        minibatch_size: Option<usize>,
        /// Continue from the weights file instead of a fresh model.
        #[arg(long)]
        resume: bool,
    },
    /// BLER sweep of one receiver on the test channel dataset.
    Evaluate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        receiver: Option<ReceiverKind>,
        #[arg(long)]
        point: Option<RatePoint>,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated Eb/N0 grid in dB.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recomputes aggregated throughput from a stored BLER CSV.
    Throughput {
        input: PathBuf,
        #[arg(long)]
        point: Option<RatePoint>,
    },
    /// Eb/N0 gap between two stored BLER curves at a target BLER.
    Compare {
        /// Reference curve (e.g. the CNN receiver).
        a: PathBuf,
        /// Curve compared against it (e.g. Log-MPA).
        b: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        target: f64,
    },
    /// MAC count of the CNN and operation count of Log-MPA.
    Complexity {
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    profile: Option<Profile>,
    #[arg(long)]
    weights: Option<PathBuf>,
}

impl ModelArgs {
    fn apply(&self, config: &mut RunConfig) {
        if let Some(p) = self.profile {
            config.model.profile = p;
        }
        if let Some(w) = &self.weights {
            config.model.weights = Some(w.clone());
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = cli.output_dir {
        config.output_dir = dir;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let command_line: Vec<String> = std::env::args().collect();
    let command_line = command_line.join(" ");
    match cli.command {
        Command::GenChannel { symbols } => {
            if let Some(s) = symbols {
                config.channel.symbols = s;
            }
            config.validate()?;
            commands::gen_channel(&config, &command_line)
        }
        Command::Train {
            model,
            epochs,
            minibatches,
            minibatch_size,
            resume,
        } => {
            model.apply(&mut config);
            if let Some(e) = epochs {
                config.train.epochs_max = e;
            }
            if let Some(m) = minibatches {
                config.train.minibatches_per_epoch = m;
            }
            if let Some(s) = minibatch_size {
                config.train.minibatch_size = s;
            }
            config.validate()?;
            commands::train(&config, resume, &command_line)
        }
        Command::Evaluate {
            model,
            receiver,
            point,
            trials,
            grid,
            seed,
        } => {
            model.apply(&mut config);
            if let Some(r) = receiver {
                config.sweep.receiver = r;
            }
            if let Some(p) = point {
                config.sweep.point = p;
            }
            if let Some(t) = trials {
                config.sweep.trials = t;
            }
            if let Some(g) = grid {
                config.sweep.ebn0_grid_db = g;
            }
            if let Some(s) = seed {
                config.sweep.seed = s;
            }
            config.validate()?;
            commands::evaluate(&config, &command_line)
        }
        Command::Throughput { input, point } => {
            if let Some(p) = point {
                config.sweep.point = p;
            }
            config.validate()?;
            commands::throughput(&config, &input, &command_line)
        }
        Command::Compare { a, b, target } => {
            if !(target > 0.0 && target < 1.0) {
                return Err(CliError::Config(format!("target BLER {target} outside (0, 1)")));
            }
            commands::compare(&config, &a, &b, target, &command_line)
        }
        Command::Complexity { model } => {
            model.apply(&mut config);
            config.validate()?;
            commands::complexity(&config, &command_line)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
