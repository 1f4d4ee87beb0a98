use std::path::PathBuf;
use std::process::ExitCode;

use acs_core::Criterion;
use acs_experiments::config::{load_config_file, resolve, Assignment};
use acs_experiments::experiment::{run_experiment, write_corpus};
use anyhow::Context;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "acs",
    version,
    about = "Block-based adaptive compressive sensing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one allocation criterion (the configured allocator).
    Run(RunArgs),
    /// Run several criteria on the same inputs (all of them by default).
    Compare(RunArgs),
    /// Write a synthetic corpus as PGM files.
    GenCorpus {
        #[arg(long, default_value = "heterogeneous16")]
        corpus: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "corpus")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input PGM image (repeatable).
    #[arg(long)]
    image: Vec<PathBuf>,
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long)]
    corpus_seed: Option<u64>,
    #[arg(long)]
    sr: Option<f64>,
    #[arg(long)]
    sr_init: Option<f64>,
    #[arg(long)]
    sr_is: Option<f64>,
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long)]
    block_size: Option<usize>,
    /// innovation, error, saliency or uniform.
    #[arg(long)]
    allocator: Option<String>,
    /// Comma-separated criteria.
    #[arg(long)]
    criteria: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn assignments(&self) -> anyhow::Result<Vec<Assignment>> {
        let mut all = match &self.config {
            Some(path) => load_config_file(path)?,
            None => Vec::new(),
        };
        if !self.image.is_empty() {
            let joined: Vec<String> = self.image.iter().map(|p| p.display().to_string()).collect();
            all.push(Assignment::flag("image", joined.join(",")));
        }
        let mut push = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                all.push(Assignment::flag(key, v));
            }
        };
        push("corpus", self.corpus.clone());
        push("corpus_seed", self.corpus_seed.map(|v| v.to_string()));
        push("sr", self.sr.map(|v| v.to_string()));
        push("sr_init", self.sr_init.map(|v| v.to_string()));
        push("sr_is", self.sr_is.map(|v| v.to_string()));
        push("stages", self.stages.map(|v| v.to_string()));
        push("block_size", self.block_size.map(|v| v.to_string()));
        push("allocator", self.allocator.clone());
        push("criteria", self.criteria.clone());
        push("seed", self.seed.map(|v| v.to_string()));
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        Ok(all)
    }
}

fn experiment(args: &RunArgs, default_criteria: Option<&[Criterion]>) -> anyhow::Result<()> {
    let cfg = resolve(&args.assignments()?, default_criteria)?;
    let rows = run_experiment(&cfg)?;
    for row in &rows {
        println!(
            "{:<12} {:<10} PSNR {:>8.3} dB  SSIM {:.4}  samples {}",
            row.image, row.criterion, row.psnr, row.ssim, row.total_samples
        );
    }
    println!("wrote {}", cfg.out.join("summary.csv").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => experiment(args, None).context("run failed"),
        Command::Compare(args) => experiment(args, Some(&Criterion::ALL)).context("compare failed"),
        Command::GenCorpus { corpus, seed, out } => write_corpus(corpus, *seed, out)
            .map(|paths| println!("wrote {} images to {}", paths.len(), out.display()))
            .context("gen-corpus failed"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
