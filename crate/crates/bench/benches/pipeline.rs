//! Throughput of the per-question hot paths: segmentation, candidate
//! generation, feature extraction, decoding, the full discovery stack,
//! and the linking feature computations.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use qedl_bench::bench_world;
use qedl_core::crf::extract_features;
use qedl_core::qed::{discover_crf, discover_kg, one_step_iteration};
use qedl_core::ranker::{
    mention_candidate_features, AvgeMode, FeatureGroups, SimilarityContext, Tokenizer,
};
use qedl_core::segmentation::{generate_candidates, segment_fmm, CandidateConfig};
use qedl_core::similarity::{semantic_similarity, SemanticParams};

fn bench_pipeline(c: &mut Criterion) {
    let world = bench_world();
    let candidate_config = CandidateConfig::default();
    let texts: Vec<&str> = world.questions.iter().map(|q| q.text.as_str()).collect();

    c.bench_function("segment_fmm_per_question", |b| {
        let mut i = 0;
        b.iter(|| {
            let text = texts[i % texts.len()];
            i += 1;
            black_box(segment_fmm(black_box(text), &world.store))
        })
    });

    let tokens0 = segment_fmm(texts[0], &world.store);
    c.bench_function("generate_candidates", |b| {
        b.iter(|| {
            black_box(generate_candidates(
                black_box(texts[0]),
                &tokens0,
                &world.store,
                &candidate_config,
            ))
        })
    });

    let kg_spans = generate_candidates(texts[0], &tokens0, &world.store, &candidate_config);
    c.bench_function("extract_features", |b| {
        b.iter(|| {
            black_box(extract_features(
                black_box(texts[0]),
                &tokens0,
                &kg_spans,
                world.df.counts(),
                &world.stopwords,
                8,
            ))
        })
    });

    let observations = extract_features(
        texts[0],
        &tokens0,
        &kg_spans,
        world.df.counts(),
        &world.stopwords,
        8,
    );
    c.bench_function("viterbi_decode", |b| {
        b.iter(|| black_box(world.model.viterbi(black_box(&observations)).unwrap()))
    });
    c.bench_function("log_partition", |b| {
        b.iter(|| black_box(world.model.log_partition(black_box(&observations)).unwrap()))
    });

    c.bench_function("discover_full_stack", |b| {
        let mut i = 0;
        b.iter(|| {
            let text = texts[i % texts.len()];
            i += 1;
            let crf = discover_crf(text, &world.model, &world.store, &world.df).unwrap();
            let kg = discover_kg(text, &world.store, &candidate_config);
            black_box(one_step_iteration(&crf, &kg, &world.store))
        })
    });

    let q_terms: Vec<String> = texts[0].split_whitespace().map(str::to_string).collect();
    let entity = world.store.entities().next().unwrap();
    let e_terms: Vec<String> = entity
        .name
        .split_whitespace()
        .map(str::to_string)
        .chain(entity.attributes.values().flat_map(|v| {
            v.split_whitespace().map(str::to_string)
        }))
        .collect();
    c.bench_function("semantic_similarity", |b| {
        b.iter(|| {
            black_box(
                semantic_similarity(
                    black_box(&q_terms),
                    &e_terms,
                    &world.embeddings,
                    &world.models.idf,
                    SemanticParams::default(),
                    e_terms.len() as f64,
                )
                .unwrap(),
            )
        })
    });

    let ctx = SimilarityContext {
        models: &world.models,
        embeddings: &world.embeddings,
        params: SemanticParams::default(),
        avge_mode: AvgeMode::PerMention,
        tokenizer: Tokenizer::Whitespace,
        groups: FeatureGroups::default(),
    };
    let mention_surface = world.questions[0].entities[0].mention.clone();
    c.bench_function("mention_candidate_features", |b| {
        b.iter(|| {
            black_box(
                mention_candidate_features(
                    black_box(texts[0]),
                    &mention_surface,
                    &world.store,
                    &ctx,
                )
                .unwrap(),
            )
        })
    });
}

criterion_group!(benches, bench_pipeline);
criterion_main!(benches);
