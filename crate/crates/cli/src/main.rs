//! `hmfep`: train, fine-tune, evaluate and export Helmholtz-machine runs.
//!
//! Every command is deterministic given its configuration and seed. The seed
//! can be set in the config file, through `HMFEP_SEED`, or with `--seed`,
//! each overriding the previous.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hmfep::checkpoint::{grammar_listing, to_json_pretty, write_file, Checkpoint};
use hmfep::grammar::enumerate_wellformed;
use hmfep::pipeline::{eval_report, export_distribution, stage1_checkpoint, stage2_checkpoint};
use hmfep::{NetworkShape, Stage2Config, TrainConfig, UpdateRule};
use serde::de::DeserializeOwned;
use serde_json::from_str;

#[derive(Debug, Parser)]
#[command(
    name = "hmfep",
    version,
    about = "Stochastic Helmholtz machine with grammar-filtered active inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Rule {
    ExactGradient,
    PaperLiteral,
}

impl From<Rule> for UpdateRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::ExactGradient => UpdateRule::ExactGradient,
            Rule::PaperLiteral => UpdateRule::PaperLiteral,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write every well-formed word, one per line, in lexicographic order.
    Grammar {
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Train from scratch with the wake-sleep algorithm.
    TrainStage1 {
        /// JSON file with training-configuration fields; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, env = "HMFEP_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        update_rule: Option<Rule>,
        /// Layer sizes from data to top, e.g. `10,8,5,3`.
        #[arg(long, value_delimiter = ',')]
        shape: Option<Vec<usize>>,
        #[arg(long)]
        trace_interval: Option<u64>,
    },
    /// Fine-tune a stage-I checkpoint with grammar-filtered active inference.
    TrainStage2 {
        #[arg(long)]
        checkpoint: PathBuf,
        /// JSON file with fine-tuning configuration fields; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
        /// Defaults to the seed stored in the checkpoint.
        #[arg(long, env = "HMFEP_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        rounds: Option<u64>,
        #[arg(long)]
        fine_tune_rate: Option<f64>,
        #[arg(long)]
        update_rule: Option<Rule>,
    },
    /// Evaluate a checkpoint and write a JSON report.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of dreams drawn for the accuracy estimate.
        #[arg(long, short, default_value_t = 10_000)]
        n: usize,
        /// Recognition samples per well-formed word for the free energy.
        #[arg(long, default_value_t = 20)]
        fe_samples: usize,
        #[arg(long)]
        report: PathBuf,
        /// Defaults to the seed stored in the checkpoint.
        #[arg(long, env = "HMFEP_SEED")]
        seed: Option<u64>,
    },
    /// Write the checkpoint's input distribution as `pattern,count,probability` CSV.
    ExportDist {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text =
                fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

fn save(path: &Path, bytes: &[u8]) -> Result<()> {
    write_file(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Grammar { out } => {
            let words = enumerate_wellformed();
            save(&out, grammar_listing(&words).as_bytes())?;
            println!("W = {}", words.len());
        }
        Command::TrainStage1 {
            config,
            out,
            seed,
            iterations,
            learning_rate,
            update_rule,
            shape,
            trace_interval,
        } => {
            let mut cfg: TrainConfig = read_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = iterations {
                cfg.stage1_iterations = n;
            }
            if let Some(r) = learning_rate {
                cfg.learning_rate = r;
            }
            if let Some(r) = update_rule {
                cfg.update_rule = r.into();
            }
            if let Some(s) = shape {
                cfg.shape = NetworkShape::new(s)?;
            }
            if let Some(t) = trace_interval {
                cfg.trace_interval = t;
            }
            let ckpt = stage1_checkpoint(&cfg)?;
            ckpt.save(&out)
                .with_context(|| format!("writing {}", out.display()))?;
            if let Some(last) = ckpt.stage1_trace.records.last() {
                println!(
                    "stage 1: {} iterations, accuracy {:.4}, free energy {:.4}",
                    last.iteration, last.accuracy, last.free_energy
                );
            }
        }
        Command::TrainStage2 {
            checkpoint,
            config,
            out,
            seed,
            rounds,
            fine_tune_rate,
            update_rule,
        } => {
            let stage1 = load_checkpoint(&checkpoint)?;
            let mut cfg: Stage2Config = read_config(config.as_deref())?;
            if let Some(r) = rounds {
                cfg.rounds = r;
            }
            if let Some(r) = fine_tune_rate {
                cfg.fine_tune_rate = r;
            }
            if let Some(r) = update_rule {
                cfg.update_rule = r.into();
            }
            let ckpt = stage2_checkpoint(&stage1, &cfg, seed)?;
            ckpt.save(&out)
                .with_context(|| format!("writing {}", out.display()))?;
            let accepted: u64 = ckpt.stage2_trace.iter().map(|r| r.accepted).sum();
            let accuracy = ckpt.stage2_trace.iter().rev().find_map(|r| r.accuracy);
            match accuracy {
                Some(a) => println!(
                    "stage 2: {} rounds, {accepted} accepted dreams, accuracy {a:.4}",
                    ckpt.round
                ),
                None => println!("stage 2: {} rounds, {accepted} accepted dreams", ckpt.round),
            }
        }
        Command::Eval {
            checkpoint,
            n,
            fe_samples,
            report,
            seed,
        } => {
            let ckpt = load_checkpoint(&checkpoint)?;
            let r = eval_report(&ckpt, n, fe_samples, seed)?;
            save(&report, to_json_pretty(&r)?.as_bytes())?;
            println!(
                "accuracy {:.4} over {} dreams, {} distinct valid, free energy {:.4} ± {:.4}",
                r.accuracy, r.n_samples, r.distinct_valid, r.fe_mean, r.fe_stderr
            );
        }
        Command::ExportDist { checkpoint, out } => {
            let ckpt = load_checkpoint(&checkpoint)?;
            save(&out, export_distribution(&ckpt)?.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
