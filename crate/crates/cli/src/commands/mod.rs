//! Subcommand implementations and the shared loading helpers.

pub mod discover;
pub mod eval;
pub mod fit_similarity;
pub mod gen_fixture;
pub mod link;
pub mod sweep;
pub mod train_qed;
pub mod train_ranker;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qedl_core::kg_store::KgStore;
use qedl_core::question::{load_questions, Question};
use qedl_core::ranker::Tokenizer;
use qedl_core::similarity::{CorpusModels, IdfTable, LdaConfig, SimilarityConfig};

use crate::config::PipelineConfig;

/// Load the KG plus lexicon and stopwords from the configured paths.
pub fn load_store(config: &PipelineConfig) -> Result<KgStore> {
    let kg_path = PipelineConfig::require(&config.paths.kg, "kg")?;
    let mut store = KgStore::load_kg(&kg_path)
        .with_context(|| format!("loading knowledge graph {}", kg_path.display()))?;
    let lexicon = PipelineConfig::require(&config.paths.lexicon, "lexicon")?;
    store
        .load_lexicon(&lexicon)
        .with_context(|| format!("loading lexicon {}", lexicon.display()))?;
    let stopwords = PipelineConfig::require(&config.paths.stopwords, "stopwords")?;
    store
        .load_stopwords(&stopwords)
        .with_context(|| format!("loading stopwords {}", stopwords.display()))?;
    Ok(store)
}

pub fn load_question_file(path: &Path) -> Result<Vec<Question>> {
    load_questions(path).with_context(|| format!("loading questions {}", path.display()))
}

/// Tokenizer selected by `similarity.segment_corpus`.
pub fn tokenizer<'a>(config: &PipelineConfig, store: &'a KgStore) -> Tokenizer<'a> {
    if config.similarity.segment_corpus {
        Tokenizer::Fmm(store)
    } else {
        Tokenizer::Whitespace
    }
}

/// Corpus documents tokenized per config.
pub fn load_corpus_docs(
    config: &PipelineConfig,
    path: &Path,
    store: &KgStore,
) -> Result<Vec<Vec<String>>> {
    let tok = tokenizer(config, store);
    let data =
        fs::read_to_string(path).with_context(|| format!("reading corpus {}", path.display()))?;
    Ok(data.lines().map(|l| tok.tokenize(l)).collect())
}

/// Document frequencies for the CRF DF column: from the corpus when
/// configured, otherwise from the question texts themselves.
pub fn load_df_table(config: &PipelineConfig, store: &KgStore, questions: &[Question]) -> Result<IdfTable> {
    match &config.paths.corpus {
        Some(path) => {
            let docs = load_corpus_docs(config, path, store)?;
            Ok(IdfTable::fit(&docs))
        }
        None => {
            let tok = tokenizer(config, store);
            let docs: Vec<Vec<String>> = questions.iter().map(|q| tok.tokenize(&q.text)).collect();
            Ok(IdfTable::fit(&docs))
        }
    }
}

pub fn similarity_config(config: &PipelineConfig) -> SimilarityConfig {
    let s = &config.similarity;
    SimilarityConfig {
        lsi_rank: s.lsi_rank,
        lda: LdaConfig {
            topics: s.lda_topics,
            alpha: s.lda_alpha,
            beta: s.lda_beta,
            train_sweeps: s.lda_train_sweeps,
            infer_sweeps: s.lda_infer_sweeps,
            seed: s.seed,
        },
    }
}

/// Where the fitted similarity models live.
pub fn similarity_cache_path(config: &PipelineConfig) -> Result<PathBuf> {
    if let Some(cache) = &config.paths.model_cache {
        return Ok(cache.clone());
    }
    Ok(config.output_dir()?.join("similarity.json"))
}

/// Load the fitted models, or fit-and-save them when a corpus is
/// configured.
pub fn load_or_fit_similarity(config: &PipelineConfig, store: &KgStore) -> Result<CorpusModels> {
    let cache = similarity_cache_path(config)?;
    if cache.exists() {
        return CorpusModels::load(&cache)
            .with_context(|| format!("loading similarity models {}", cache.display()));
    }
    let Some(corpus_path) = &config.paths.corpus else {
        anyhow::bail!(
            "similarity models are not fitted: no cache at {} and no paths.corpus to fit from \
             (run fit-similarity first)",
            cache.display()
        );
    };
    let docs = load_corpus_docs(config, corpus_path, store)?;
    let models = CorpusModels::fit(&docs, store.stopwords(), &similarity_config(config))
        .context("fitting similarity models")?;
    if let Some(parent) = cache.parent() {
        fs::create_dir_all(parent).ok();
    }
    models
        .save(&cache)
        .with_context(|| format!("writing similarity cache {}", cache.display()))?;
    Ok(models)
}

/// Write a buffer into the run directory, creating it as needed.
pub fn write_output(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create directory {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}
