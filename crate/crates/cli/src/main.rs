//! `mmrec`: Move Method recommendation from code embeddings.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data or missing-artifact
//! error, 4 internal failure.

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mmrec::config::{ConfigError, RunConfig};
use mmrec::pipeline::{self, stages, summary_table, Decision, PipelineError};
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(
    name = "mmrec",
    version,
    about = "Recommend Move Method refactorings from path-based code embeddings"
)]
struct Cli {
    /// TOML run configuration; built-in defaults when absent
    #[arg(long, global = true, env = "MMREC_CONFIG")]
    config: Option<PathBuf>,

    /// Master seed; overrides the config file
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for parallel stages (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic corpus split into train/ and eval/
    Generate {
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Number of projects
        #[arg(long, default_value_t = 20)]
        projects: usize,
        /// Projects placed in eval/
        #[arg(long, default_value_t = 5)]
        holdout: usize,
    },
    /// Extract path-context bags from the training corpus
    Extract,
    /// Train the code embedder on the extracted bags
    TrainEmbed,
    /// Build the balanced labeled dataset from the training corpus
    BuildDataset,
    /// Fit PCA, the SVM and Platt scaling; write the model bundle
    TrainClf,
    /// Inject moves into the evaluation corpus and record ground truth
    Inject,
    /// Recommend moves for the injected corpus
    Recommend {
        /// Probability a move must exceed (overrides the config)
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Score recommendations against the ground truth
    Evaluate,
    /// Run every stage from extract to evaluate
    Pipeline,
}

enum Failure {
    Config(String),
    Data(String),
    Internal(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let msg = e.to_string();
        match e {
            PipelineError::Config(_) => Failure::Config(msg),
            PipelineError::Stage { .. } => Failure::Internal(msg),
            _ => Failure::Data(msg),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let cfg = match cli.seed {
        Some(seed) => cfg.with_seed(seed),
        None => cfg,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Internal(e.to_string()))?;
    }
    if let Command::Generate {
        out,
        projects,
        holdout,
    } = &cli.command
    {
        if *holdout > *projects {
            return Err(Failure::Config("--holdout cannot exceed --projects".into()));
        }
        let seed = cli.seed.unwrap_or(0);
        let (train, eval) = mmrec::synth::generate_split(*projects, *holdout, seed);
        train
            .write(&out.join("train"))
            .map_err(|e| Failure::Internal(e.to_string()))?;
        eval.write(&out.join("eval"))
            .map_err(|e| Failure::Internal(e.to_string()))?;
        println!(
            "generated {} train and {} eval projects in {}",
            projects - holdout,
            holdout,
            out.display()
        );
        return Ok(());
    }

    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Generate { .. } => unreachable!("handled above"),
        Command::Extract => {
            let n = stages::extract(&cfg)?;
            println!("extracted {n} methods");
        }
        Command::TrainEmbed => {
            let s = stages::train_embed(&cfg)?;
            println!(
                "embedder loss {:.4} -> {:.4}, name accuracy {:.3}",
                s.loss_history.first().copied().unwrap_or(f64::NAN),
                s.loss_history.last().copied().unwrap_or(f64::NAN),
                s.train_accuracy
            );
        }
        Command::BuildDataset => {
            let n = stages::build_dataset(&cfg)?;
            println!("built {n} labeled examples");
        }
        Command::TrainClf => {
            let m = stages::train_clf(&cfg)?;
            println!(
                "classifier: {} -> {} dims, test accuracy {:.3}",
                m.raw_dim, m.reduced_dim, m.test_accuracy
            );
        }
        Command::Inject => {
            let n = stages::inject(&cfg)?;
            println!("injected {n} moves");
        }
        Command::Recommend { threshold } => {
            let threshold = threshold.unwrap_or(cfg.threshold);
            if !(0.0..=1.0).contains(&threshold) {
                return Err(Failure::Config(format!(
                    "--threshold must lie in [0, 1], got {threshold}"
                )));
            }
            let recs = stages::recommend(&cfg, threshold)?;
            let moves = recs.iter().filter(|r| r.decision == Decision::Move).count();
            println!("{} methods scored, {moves} moves recommended", recs.len());
        }
        Command::Evaluate => {
            let report = stages::evaluate(&cfg)?;
            print!("{}", summary_table(&report));
        }
        Command::Pipeline => {
            let out = pipeline::run_end_to_end(&cfg)?;
            print!("{}", summary_table(&out.report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_env("MMREC_LOG").unwrap_or_else(|_| EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(4)
        }
    }
}
