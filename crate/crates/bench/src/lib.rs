//! Shared setup for the benchmark targets: a generated fixture world
//! loaded into memory, plus a trained discovery model.

use std::collections::HashSet;

use qedl_core::crf::{CrfModel, CrfTrainConfig, FeatureColumns};
use qedl_core::eval::train_qed_model;
use qedl_core::fixtures::{generate_fixture, FixtureConfig};
use qedl_core::kg_store::KgStore;
use qedl_core::question::{load_questions, Question};
use qedl_core::similarity::{
    CorpusModels, EmbeddingTable, IdfTable, LdaConfig, SimilarityConfig,
};

pub struct BenchWorld {
    pub store: KgStore,
    pub questions: Vec<Question>,
    pub df: IdfTable,
    pub model: CrfModel,
    pub models: CorpusModels,
    pub embeddings: EmbeddingTable,
    pub stopwords: HashSet<String>,
}

/// Generate and load a mid-sized deterministic world, then train the
/// ensemble model once.
pub fn bench_world() -> BenchWorld {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = FixtureConfig {
        seed: 23,
        n_entities: 40,
        n_questions: 120,
        vocab_size: 260,
        embedding_dim: 16,
        ambiguity_rate: 0.3,
    };
    let files = generate_fixture(&config, dir.path()).expect("fixture");
    let mut store = KgStore::load_kg(&files.kg).expect("kg");
    store.load_lexicon(&files.lexicon).expect("lexicon");
    store.load_stopwords(&files.stopwords).expect("stopwords");
    let embeddings = EmbeddingTable::load(&files.embeddings).expect("embeddings");
    let corpus: Vec<Vec<String>> = std::fs::read_to_string(&files.corpus)
        .expect("corpus")
        .lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect();
    let questions = load_questions(&files.questions).expect("questions");
    let df = IdfTable::fit(&corpus);

    let model = train_qed_model(
        &questions[..80],
        &store,
        &df,
        &CrfTrainConfig {
            epochs: 60,
            lambda: 0.05,
            columns: FeatureColumns::ensemble(),
            ..CrfTrainConfig::default()
        },
    )
    .expect("train");

    let models = CorpusModels::fit(
        &corpus,
        store.stopwords(),
        &SimilarityConfig {
            lsi_rank: 40,
            lda: LdaConfig {
                topics: 10,
                train_sweeps: 100,
                infer_sweeps: 30,
                seed: 3,
                ..LdaConfig::default()
            },
        },
    )
    .expect("similarity");
    let stopwords = store.stopwords().clone();

    BenchWorld {
        store,
        questions,
        df,
        model,
        models,
        embeddings,
        stopwords,
    }
}
