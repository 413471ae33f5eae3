//! `epp`: fit Elo-based Predictive Power scores from benchmark results and
//! build reports from them.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use epp_core::{Algorithm, PairingMode, SpreadKind, TiePolicy};

use crate::config::{OutputFormat, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "epp",
    version,
    about = "Elo-based Predictive Power for model benchmarks"
)]
struct Cli {
    /// Report format
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
    /// Directory for output files
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Datasets processed in parallel
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// `key = value` settings file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct FitFlags {
    /// Which split pairs form matches
    #[arg(long)]
    pairing: Option<PairingMode>,
    /// How equal scores are counted
    #[arg(long)]
    ties: Option<TiePolicy>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// Ridge penalty on the scores
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args, Debug)]
struct ScoresInput {
    /// Fitted score files (`epp_*.json`) or directories containing them
    #[arg(long = "scores", required = true, num_args = 1..)]
    paths: Vec<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit EPP scores, one output pair per dataset
    Fit {
        /// Scores table: CSV, or JSON when the file ends in `.json`
        #[arg(long, short)]
        input: PathBuf,
        /// Only fit these datasets
        #[arg(long = "dataset")]
        datasets: Vec<String>,
        /// Scores are losses: smaller is better
        #[arg(long)]
        lower_is_better: bool,
        /// Also write the aggregated match counts
        #[arg(long)]
        save_counts: bool,
        #[command(flatten)]
        fit: FitFlags,
    },
    /// Rank models within each dataset
    Leaderboard {
        #[command(flatten)]
        scores: ScoresInput,
        /// Raw scores table, for the mean-score column
        #[arg(long, short)]
        input: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
        /// Also write the pairwise win-probability matrix
        #[arg(long)]
        win_matrix: bool,
    },
    /// Tabulate scores and probabilities against an average model across datasets
    Compare {
        #[command(flatten)]
        scores: ScoresInput,
        /// Models to include (default: every fitted model)
        #[arg(long, value_delimiter = ',')]
        models: Vec<String>,
    },
    /// Average EPP against spread per algorithm and dataset, with an SVG plot
    Embed {
        #[command(flatten)]
        scores: ScoresInput,
        /// Raw scores table, for the model-to-algorithm mapping
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long)]
        spread: Option<SpreadKind>,
    },
    /// Test hyperparameters against average EPP and spread
    Tunability {
        #[command(flatten)]
        scores: ScoresInput,
        /// Raw scores table, for the model-to-algorithm mapping
        #[arg(long, short)]
        input: PathBuf,
        /// `model,parameter,value` table
        #[arg(long)]
        hyperparams: PathBuf,
        #[arg(long)]
        spread: Option<SpreadKind>,
    },
    /// Generate a scores table from known skills
    Simulate {
        #[arg(long, default_value_t = 10)]
        models: usize,
        #[arg(long, default_value_t = 20)]
        splits: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = NoiseKind::Gumbel)]
        noise: NoiseKind,
        /// Standard deviation of Gaussian noise
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Skills are evenly spaced from this value ...
        #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
        skill_min: f64,
        /// ... to this one
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        skill_max: f64,
    },
    /// Classical sequential Elo over an ordered `winner,loser` list
    Elo {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = MatchOrder::File)]
        order: MatchOrder,
        #[arg(long, default_value_t = 32.0)]
        k_factor: f64,
        #[arg(long, default_value_t = 1000.0)]
        initial: f64,
        #[arg(long, default_value_t = 400.0)]
        scale: f64,
    },
    /// Compare fitted scores on simulated data with the true skills
    Recovery {
        /// Fitted scores for the simulated dataset
        #[arg(long)]
        scores: PathBuf,
        /// `truth.json` written by `simulate`
        #[arg(long)]
        truth: PathBuf,
    },
    /// Print the effective settings in config-file form
    Config {
        #[command(flatten)]
        fit: FitFlags,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum NoiseKind {
    Gumbel,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MatchOrder {
    File,
    Reversed,
}

impl FitFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(p) = self.pairing {
            cfg.pairing = p;
        }
        if let Some(t) = self.ties {
            cfg.ties = t;
        }
        if let Some(a) = self.algorithm {
            cfg.fit.algorithm = a;
        }
        if let Some(l) = self.lambda {
            cfg.fit.ridge_lambda = l;
        }
        if let Some(t) = self.tol {
            cfg.fit.tol = t;
        }
        if let Some(n) = self.max_iter {
            cfg.fit.max_iter = n;
        }
    }
}

fn run_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading config {}: {e}", path.display()))?;
        cfg.apply_text(&text)
            .map_err(|e| anyhow::anyhow!("config {}: {e:#}", path.display()))?;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    match &cli.command {
        Command::Fit { fit, .. } | Command::Config { fit } => fit.apply(&mut cfg),
        Command::Embed {
            spread: Some(s), ..
        }
        | Command::Tunability {
            spread: Some(s), ..
        } => cfg.spread = *s,
        _ => {}
    }
    cfg.fit
        .validate()
        .map_err(|e| commands::Invalid(format!("invalid fit settings: {e}")))?;
    if cfg.jobs == 0 {
        anyhow::bail!("--jobs must be at least 1");
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = run_config(&cli)?;
    match cli.command {
        Command::Fit {
            input,
            datasets,
            lower_is_better,
            save_counts,
            ..
        } => commands::fit(&cfg, &input, &datasets, lower_is_better, save_counts),
        Command::Leaderboard {
            scores,
            input,
            top_k,
            win_matrix,
        } => commands::leaderboard(&cfg, &scores.paths, input.as_deref(), top_k, win_matrix),
        Command::Compare { scores, models } => commands::compare(&cfg, &scores.paths, &models),
        Command::Embed { scores, input, .. } => commands::embed(&cfg, &scores.paths, &input),
        Command::Tunability {
            scores,
            input,
            hyperparams,
            ..
        } => commands::tunability(&cfg, &scores.paths, &input, &hyperparams),
        Command::Simulate {
            models,
            splits,
            seed,
            noise,
            sigma,
            skill_min,
            skill_max,
        } => {
            let noise = match noise {
                NoiseKind::Gumbel => epp_core::Noise::Gumbel,
                NoiseKind::Gaussian => epp_core::Noise::Gaussian { sigma },
            };
            commands::simulate(&cfg, models, splits, seed, noise, skill_min, skill_max)
        }
        Command::Elo {
            input,
            order,
            k_factor,
            initial,
            scale,
        } => {
            let elo = epp_core::EloConfig64 {
                initial_rating: initial,
                k_factor,
                scale,
            };
            commands::elo(&cfg, &input, order == MatchOrder::Reversed, &elo)
        }
        Command::Recovery { scores, truth } => commands::recovery(&cfg, &scores, &truth),
        Command::Config { .. } => commands::show_config(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::Invalid>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
