//! The entity-linking feature computations: saliency-weighted embedding
//! similarity, TF-IDF / LSI / LDA text similarity, and log popularity.
//!
//! All term-keyed tables normalize their keys with the shared
//! [`crate::text::normalize`] function. Fitted models are immutable and
//! deterministic functions of (corpus, config, seed).

mod embedding;
mod idf;
mod lda;
mod lsi;
mod semantic;
mod tfidf;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use embedding::{cosine, EmbeddingTable};
pub use idf::IdfTable;
pub use lda::{LdaConfig, LdaModel};
pub use lsi::LsiModel;
pub use semantic::{semantic_similarity, semantic_similarity_weighted, SemanticParams};
pub use tfidf::{SparseVec, TfidfModel};

use crate::error::{Error, Result};
use crate::kg_store::KgEntity;

const MODELS_VERSION: u32 = 1;

/// Fitting parameters for the corpus-backed models.
#[derive(Debug, Clone)]
pub struct SimilarityConfig {
    pub lsi_rank: usize,
    pub lda: LdaConfig,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            lsi_rank: 100,
            lda: LdaConfig::default(),
        }
    }
}

/// IDF table plus the three fitted text-similarity models.
#[derive(Debug, Clone)]
pub struct CorpusModels {
    pub idf: IdfTable,
    pub tfidf: TfidfModel,
    pub lsi: LsiModel,
    pub lda: LdaModel,
}

impl CorpusModels {
    /// Fit everything over tokenized documents.
    pub fn fit(
        docs: &[Vec<String>],
        stopwords: &HashSet<String>,
        config: &SimilarityConfig,
    ) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::invalid("similarity corpus is empty"));
        }
        let idf = IdfTable::fit(docs);
        let tfidf = TfidfModel::fit(docs);
        let lsi = LsiModel::fit(&tfidf, docs, config.lsi_rank)?;
        let lda = LdaModel::fit(docs, stopwords, &config.lda)?;
        Ok(CorpusModels {
            idf,
            tfidf,
            lsi,
            lda,
        })
    }

    pub fn tfidf_similarity(&self, a_terms: &[String], b_terms: &[String]) -> f64 {
        self.tfidf.similarity(a_terms, b_terms)
    }

    pub fn lsi_similarity(&self, a_terms: &[String], b_terms: &[String]) -> f64 {
        self.lsi.similarity(&self.tfidf, a_terms, b_terms)
    }

    pub fn lda_similarity(&self, a_terms: &[String], b_terms: &[String]) -> f64 {
        self.lda.similarity(a_terms, b_terms)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelsFile {
            version: MODELS_VERSION,
            idf: self.idf.to_stored(),
            tfidf: self.tfidf.clone(),
            lsi: self.lsi.clone(),
            lda: self.lda.clone(),
        };
        let json = serde_json::to_string(&file).map_err(|e| Error::Model(e.to_string()))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelsFile =
            serde_json::from_str(&data).map_err(|e| Error::Model(e.to_string()))?;
        if file.version != MODELS_VERSION {
            return Err(Error::Model(format!(
                "unsupported similarity model version {} (expected {MODELS_VERSION})",
                file.version
            )));
        }
        let mut lda = file.lda;
        lda.rebuild_indexes();
        Ok(CorpusModels {
            idf: IdfTable::from_stored(file.idf),
            tfidf: file.tfidf,
            lsi: file.lsi,
            lda,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelsFile {
    version: u32,
    idf: idf::StoredIdf,
    tfidf: TfidfModel,
    lsi: LsiModel,
    lda: LdaModel,
}

/// `log10` of the stored hit count (ingestion guarantees ≥ 1).
pub fn popularity_feature(entity: &KgEntity) -> f64 {
    (entity.popularity as f64).log10()
}
