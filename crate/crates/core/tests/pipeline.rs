//! End-to-end pipeline over a generated fixture, in process: discovery
//! training and the directional quality ordering of the strategies, then
//! similarity fitting, ranking, and the end-to-end report.

use std::collections::HashSet;

use qedl_core::crf::{CrfTrainConfig, FeatureColumns};
use qedl_core::eval::{
    convergence_sweep, el_accuracy, evaluate_crf_model, evaluate_kg_retrieval, overall_metrics,
    qed_metrics, train_qed_model, QedMethod,
};
use qedl_core::fixtures::{generate_fixture, FixtureConfig};
use qedl_core::kg_store::KgStore;
use qedl_core::qed::{discover_crf, discover_kg, one_step_iteration, Mention};
use qedl_core::question::{load_questions, Question};
use qedl_core::ranker::{
    mention_candidate_features, rank_candidates, train_ranker, AvgeMode, FeatureGroups,
    RankExample, RankerConfig, SimilarityContext, Tokenizer,
};
use qedl_core::segmentation::CandidateConfig;
use qedl_core::similarity::{
    CorpusModels, EmbeddingTable, IdfTable, LdaConfig, SemanticParams, SimilarityConfig,
};

struct TestBed {
    store: KgStore,
    embeddings: EmbeddingTable,
    corpus_docs: Vec<Vec<String>>,
    train: Vec<Question>,
    heldout: Vec<Question>,
}

fn load_bed() -> TestBed {
    let dir = tempfile::tempdir().unwrap();
    let config = FixtureConfig {
        seed: 17,
        n_entities: 30,
        n_questions: 120,
        vocab_size: 220,
        embedding_dim: 12,
        ambiguity_rate: 0.3,
    };
    let files = generate_fixture(&config, dir.path()).unwrap();

    let mut store = KgStore::load_kg(&files.kg).unwrap();
    store.load_lexicon(&files.lexicon).unwrap();
    store.load_stopwords(&files.stopwords).unwrap();
    let embeddings = EmbeddingTable::load(&files.embeddings).unwrap();
    let corpus_docs: Vec<Vec<String>> = std::fs::read_to_string(&files.corpus)
        .unwrap()
        .lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect();
    let questions = load_questions(&files.questions).unwrap();
    let split = questions.len() * 3 / 4;
    let (train, heldout) = questions.split_at(split);
    TestBed {
        store,
        embeddings,
        corpus_docs,
        train: train.to_vec(),
        heldout: heldout.to_vec(),
    }
}

fn crf_config(columns: FeatureColumns) -> CrfTrainConfig {
    CrfTrainConfig {
        epochs: 100,
        lambda: 0.05,
        columns,
        ..CrfTrainConfig::default()
    }
}

#[test]
fn discovery_strategies_order_as_expected() {
    let bed = load_bed();
    let df = IdfTable::fit(&bed.corpus_docs);

    let kg_report =
        evaluate_kg_retrieval(&bed.heldout, &bed.store, &CandidateConfig::default());

    let plain = train_qed_model(
        &bed.train,
        &bed.store,
        &df,
        &crf_config(FeatureColumns::plain()),
    )
    .unwrap();
    let plain_report = evaluate_crf_model(&plain, &bed.heldout, &bed.store, &df).unwrap();

    let ensemble = train_qed_model(
        &bed.train,
        &bed.store,
        &df,
        &crf_config(FeatureColumns::ensemble()),
    )
    .unwrap();
    let ensemble_report = evaluate_crf_model(&ensemble, &bed.heldout, &bed.store, &df).unwrap();

    // Retrieval finds every gold surface, so its recall caps the CRF's,
    // while its precision pays for the distractors.
    assert!(
        kg_report.recall > plain_report.recall,
        "kg recall {} vs plain crf recall {}",
        kg_report.recall,
        plain_report.recall
    );
    assert!(
        plain_report.precision > kg_report.precision,
        "plain crf precision {} vs kg precision {}",
        plain_report.precision,
        kg_report.precision
    );
    assert!(
        ensemble_report.f1 >= kg_report.f1.max(plain_report.f1),
        "ensemble f1 {} vs kg {} / plain {}",
        ensemble_report.f1,
        kg_report.f1,
        plain_report.f1
    );

    // The lexicon union can only raise recall.
    let mut with_iteration = Vec::new();
    let mut without_iteration = Vec::new();
    for q in &bed.heldout {
        let crf_mentions = discover_crf(&q.text, &ensemble, &bed.store, &df).unwrap();
        let kg_mentions = discover_kg(&q.text, &bed.store, &CandidateConfig::default());
        let merged = one_step_iteration(&crf_mentions, &kg_mentions, &bed.store);
        let gold: Vec<(usize, usize)> = q.entities.iter().map(|g| (g.start, g.end)).collect();
        with_iteration.push((merged.iter().map(Mention::span).collect(), gold.clone()));
        without_iteration.push((crf_mentions.iter().map(Mention::span).collect(), gold));
    }
    let merged_report = qed_metrics(&with_iteration);
    let crf_only_report = qed_metrics(&without_iteration);
    assert!(merged_report.recall >= crf_only_report.recall);
}

#[test]
fn linking_beats_popularity_free_guessing() {
    let bed = load_bed();
    let models = CorpusModels::fit(
        &bed.corpus_docs,
        &normalized_stopwords(&bed.store),
        &SimilarityConfig {
            lsi_rank: 40,
            lda: LdaConfig {
                topics: 10,
                train_sweeps: 150,
                infer_sweeps: 30,
                seed: 5,
                ..LdaConfig::default()
            },
        },
    )
    .unwrap();
    let ctx = SimilarityContext {
        models: &models,
        embeddings: &bed.embeddings,
        params: SemanticParams::default(),
        avge_mode: AvgeMode::PerMention,
        tokenizer: Tokenizer::Whitespace,
        groups: FeatureGroups::default(),
    };

    // Training pairs from gold mentions.
    let mut dataset = Vec::new();
    for q in &bed.train {
        for g in &q.entities {
            let cands = mention_candidate_features(&q.text, &g.mention, &bed.store, &ctx).unwrap();
            let gold = cands.iter().find(|(id, _)| *id == g.kb_id).map(|(_, f)| *f);
            let Some(gold) = gold else { continue };
            let negatives: Vec<_> = cands
                .iter()
                .filter(|(id, _)| *id != g.kb_id)
                .map(|(_, f)| *f)
                .collect();
            dataset.push(RankExample { gold, negatives });
        }
    }
    assert!(dataset.iter().any(|ex| !ex.negatives.is_empty()));
    let model = train_ranker(&dataset, &RankerConfig::default()).unwrap();

    // Link held-out gold mentions and score.
    let mut items = Vec::new();
    let mut ambiguous = 0;
    for q in &bed.heldout {
        for g in &q.entities {
            let cands = mention_candidate_features(&q.text, &g.mention, &bed.store, &ctx).unwrap();
            if cands.len() > 1 {
                ambiguous += 1;
            }
            let ranked = rank_candidates(&model, &cands);
            let top1 = ranked.first().map(|(id, _)| id.clone());
            items.push((top1, g.kb_id.clone()));
        }
    }
    assert!(ambiguous > 0, "fixture must exercise ambiguity");
    let accuracy = el_accuracy(&items);
    // Random guessing over ambiguous pairs would sit near
    // 1 - ambiguous/(2·total); trained linking must do better.
    let guess = 1.0 - ambiguous as f64 / (2.0 * items.len() as f64);
    assert!(
        accuracy > guess,
        "accuracy {accuracy} should beat guessing {guess}"
    );

    // End-to-end report plumbing.
    let per_question: Vec<_> = bed
        .heldout
        .iter()
        .map(|q| {
            let pred: Vec<((usize, usize), Option<String>)> = q
                .entities
                .iter()
                .map(|g| {
                    let cands =
                        mention_candidate_features(&q.text, &g.mention, &bed.store, &ctx).unwrap();
                    let ranked = rank_candidates(&model, &cands);
                    ((g.start, g.end), ranked.first().map(|(id, _)| id.clone()))
                })
                .collect();
            let gold: Vec<((usize, usize), String)> = q
                .entities
                .iter()
                .map(|g| ((g.start, g.end), g.kb_id.clone()))
                .collect();
            (pred, gold)
        })
        .collect();
    let overall = overall_metrics(&per_question);
    assert!(overall.precision > 0.5);
    assert_eq!(overall.predicted, overall.gold);
}

fn normalized_stopwords(store: &KgStore) -> HashSet<String> {
    store.stopwords().clone()
}

#[test]
fn fixed_avge_mode_changes_only_the_semantic_slot() {
    let bed = load_bed();
    let models = CorpusModels::fit(
        &bed.corpus_docs,
        &normalized_stopwords(&bed.store),
        &SimilarityConfig {
            lsi_rank: 20,
            lda: LdaConfig {
                topics: 5,
                train_sweeps: 40,
                infer_sweeps: 15,
                seed: 5,
                ..LdaConfig::default()
            },
        },
    )
    .unwrap();
    let ctx_of = |avge_mode| SimilarityContext {
        models: &models,
        embeddings: &bed.embeddings,
        params: SemanticParams::default(),
        avge_mode,
        tokenizer: Tokenizer::Whitespace,
        groups: FeatureGroups::default(),
    };
    let global = qedl_core::ranker::kg_mean_entity_length(&bed.store, &Tokenizer::Whitespace);
    assert!(global >= 1.0);

    let q = &bed.train[0];
    let g = &q.entities[0];
    let per_mention =
        mention_candidate_features(&q.text, &g.mention, &bed.store, &ctx_of(AvgeMode::PerMention))
            .unwrap();
    let fixed =
        mention_candidate_features(&q.text, &g.mention, &bed.store, &ctx_of(AvgeMode::Fixed(global)))
            .unwrap();
    assert_eq!(per_mention.len(), fixed.len());
    for ((id_a, fa), (id_b, fb)) in per_mention.iter().zip(&fixed) {
        assert_eq!(id_a, id_b);
        assert!(fa.0.iter().all(|v| v.is_finite()));
        assert!(fb.0.iter().all(|v| v.is_finite()));
        // Only the saturation denominator moved, so slots 1.. agree.
        assert_eq!(fa.0[1..], fb.0[1..]);
    }
}

#[test]
fn sweep_rows_are_deterministic_and_consistent() {
    let bed = load_bed();
    let df = IdfTable::fit(&bed.corpus_docs);
    let config = crf_config(FeatureColumns::plain());

    let a = convergence_sweep(
        &bed.train,
        &bed.heldout,
        &[40, 80],
        &[QedMethod::Crf, QedMethod::Ensemble],
        &bed.store,
        &df,
        &config,
        99,
    )
    .unwrap();
    assert_eq!(a.rows.len(), 4);
    let b = convergence_sweep(
        &bed.train,
        &bed.heldout,
        &[40, 80],
        &[QedMethod::Crf, QedMethod::Ensemble],
        &bed.store,
        &df,
        &config,
        99,
    )
    .unwrap();
    assert_eq!(a.to_csv(), b.to_csv());

    // Oversized request is an error.
    assert!(convergence_sweep(
        &bed.train,
        &bed.heldout,
        &[bed.train.len() + 1],
        &[QedMethod::Crf],
        &bed.store,
        &df,
        &config,
        99,
    )
    .is_err());
}
