use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use qedl_core::fixtures::{generate_fixture, FixtureConfig};

use crate::config::{Manifest, PipelineConfig};

#[derive(Parser)]
pub struct Args {
    /// Directory for the generated files (default: <output_dir>/fixture).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_entities: Option<usize>,
    #[arg(long)]
    n_questions: Option<usize>,
    #[arg(long)]
    ambiguity_rate: Option<f64>,
}

pub fn run(mut config: PipelineConfig, args: Args) -> Result<()> {
    let f = &mut config.fixture;
    if let Some(v) = args.seed {
        f.seed = v;
    }
    if let Some(v) = args.n_entities {
        f.n_entities = v;
    }
    if let Some(v) = args.n_questions {
        f.n_questions = v;
    }
    if let Some(v) = args.ambiguity_rate {
        f.ambiguity_rate = v;
    }
    config.validate()?;

    let out_dir = match args.out {
        Some(dir) => dir,
        None => config.output_dir()?.join("fixture"),
    };
    let fixture_config = FixtureConfig {
        seed: config.fixture.seed,
        n_entities: config.fixture.n_entities,
        n_questions: config.fixture.n_questions,
        vocab_size: config.fixture.vocab_size,
        embedding_dim: config.fixture.embedding_dim,
        ambiguity_rate: config.fixture.ambiguity_rate,
    };
    let files = generate_fixture(&fixture_config, &out_dir)
        .with_context(|| format!("generating fixture under {}", out_dir.display()))?;

    if let Ok(dir) = config.output_dir() {
        Manifest::update(&dir, "gen-fixture", &config)?;
    }
    println!("kg         {}", files.kg.display());
    println!("lexicon    {}", files.lexicon.display());
    println!("stopwords  {}", files.stopwords.display());
    println!("embeddings {}", files.embeddings.display());
    println!("corpus     {}", files.corpus.display());
    println!("questions  {}", files.questions.display());
    Ok(())
}
