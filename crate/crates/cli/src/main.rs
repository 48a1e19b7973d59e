//! `qedl` — batch pipeline for discovering entity mentions in short
//! questions and linking them to a local knowledge graph.

mod commands;
mod config;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::PipelineConfig;

#[derive(Parser)]
#[command(name = "qedl", version, about = "Question entity discovery and linking over a local knowledge graph")]
struct Cli {
    /// JSON configuration file; omitted fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run directory for outputs and the manifest (overrides
    /// paths.output_dir).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Worker threads for per-question work; 1 keeps logs strictly
    /// ordered.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic KG, lexicon, embeddings, corpus, and
    /// annotated questions.
    GenFixture(commands::gen_fixture::Args),
    /// Train the discovery CRF (plain or with the KG feature column).
    TrainQed(commands::train_qed::Args),
    /// Discover mentions: CRF decode plus the lexicon-checked union with
    /// KG retrieval.
    Discover(commands::discover::Args),
    /// Fit the IDF/TF-IDF/LSI/LDA models over the corpus.
    FitSimilarity(commands::fit_similarity::Args),
    /// Train the pairwise entity ranker on gold annotations.
    TrainRanker(commands::train_ranker::Args),
    /// Rank candidate entities for discovered mentions.
    Link(commands::link::Args),
    /// Score discovery, linking, and end-to-end predictions against gold.
    Eval(commands::eval::Args),
    /// Train-and-evaluate over growing training-set sizes.
    Sweep(commands::sweep::Args),
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut config = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(dir) = &cli.output_dir {
        config.paths.output_dir = Some(dir.clone());
    }
    if cli.jobs > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .ok();
    }

    match cli.command {
        Command::GenFixture(args) => commands::gen_fixture::run(config, args),
        Command::TrainQed(args) => commands::train_qed::run(config, args),
        Command::Discover(args) => commands::discover::run(config, args, cli.jobs),
        Command::FitSimilarity(args) => commands::fit_similarity::run(config, args),
        Command::TrainRanker(args) => commands::train_ranker::run(config, args),
        Command::Link(args) => commands::link::run(config, args, cli.jobs),
        Command::Eval(args) => commands::eval::run(config, args),
        Command::Sweep(args) => commands::sweep::run(config, args),
    }
}
