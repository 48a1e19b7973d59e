use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use qedl_core::similarity::CorpusModels;

use crate::commands::{load_corpus_docs, load_store, similarity_cache_path, similarity_config};
use crate::config::{Manifest, PipelineConfig};

#[derive(Parser)]
pub struct Args {
    /// Cache file for the fitted models (default: paths.model_cache or
    /// <output_dir>/similarity.json).
    #[arg(long)]
    pub cache_out: Option<PathBuf>,
}

pub fn run(config: PipelineConfig, args: Args) -> Result<()> {
    let store = load_store(&config)?;
    let corpus_path = PipelineConfig::require(&config.paths.corpus, "corpus")?;
    let docs = load_corpus_docs(&config, &corpus_path, &store)?;
    let models = CorpusModels::fit(&docs, store.stopwords(), &similarity_config(&config))
        .context("fitting similarity models")?;

    let cache = match args.cache_out {
        Some(p) => p,
        None => similarity_cache_path(&config)?,
    };
    if let Some(parent) = cache.parent() {
        std::fs::create_dir_all(parent).ok();
    }
    models
        .save(&cache)
        .with_context(|| format!("writing similarity cache {}", cache.display()))?;
    if let Ok(dir) = config.output_dir() {
        Manifest::update(&dir, "fit-similarity", &config)?;
    }
    println!(
        "fitted similarity models over {} documents (vocab {}, lsi rank {}, lda topics {}) -> {}",
        docs.len(),
        models.tfidf.vocab_size(),
        models.lsi.rank(),
        models.lda.topics(),
        cache.display()
    );
    Ok(())
}
