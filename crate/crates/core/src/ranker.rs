//! Entity linking: candidate generation from the surface index, the
//! 8-value feature stack, pairwise hinge training, and ranking.
//!
//! Feature layout, fixed: semantic similarity; TF-IDF/LSI/LDA against the
//! entity name; TF-IDF/LSI/LDA against the concatenated attribute values;
//! log popularity. Features are z-normalized with training-set statistics
//! stored in the model.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg_store::{KgEntity, KgStore};
use crate::qed::Mention;
use crate::segmentation::segment_fmm;
use crate::similarity::{
    popularity_feature, semantic_similarity, CorpusModels, EmbeddingTable, SemanticParams,
};
use crate::text::normalize;

const MODEL_VERSION: u32 = 1;
pub const EL_FEATURE_COUNT: usize = 8;

/// Names of the eight feature slots, in layout order.
pub const EL_FEATURE_NAMES: [&str; EL_FEATURE_COUNT] = [
    "semantic",
    "qen_tfidf",
    "qen_lsi",
    "qen_lda",
    "qea_tfidf",
    "qea_lsi",
    "qea_lda",
    "popularity",
];

/// One candidate's feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElFeatureVector(pub [f64; EL_FEATURE_COUNT]);

/// Feature-group switches for ablation runs; disabled groups are zeroed
/// in place so the layout never changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureGroups {
    pub semantic: bool,
    pub ts_qen: bool,
    pub ts_qea: bool,
    pub popularity: bool,
}

impl Default for FeatureGroups {
    fn default() -> Self {
        FeatureGroups {
            semantic: true,
            ts_qen: true,
            ts_qea: true,
            popularity: true,
        }
    }
}

impl FeatureGroups {
    /// Parse a comma-separated group list (`semantic,ts_qen,ts_qea,
    /// popularity`); unknown names are an error.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut groups = FeatureGroups {
            semantic: false,
            ts_qen: false,
            ts_qea: false,
            popularity: false,
        };
        for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name {
                "semantic" => groups.semantic = true,
                "ts_qen" => groups.ts_qen = true,
                "ts_qea" => groups.ts_qea = true,
                "popularity" => groups.popularity = true,
                other => {
                    return Err(Error::invalid(format!(
                        "unknown feature group {other:?} (expected semantic, ts_qen, ts_qea, popularity)"
                    )))
                }
            }
        }
        Ok(groups)
    }

    fn apply(&self, mut v: ElFeatureVector) -> ElFeatureVector {
        if !self.semantic {
            v.0[0] = 0.0;
        }
        if !self.ts_qen {
            v.0[1..4].fill(0.0);
        }
        if !self.ts_qea {
            v.0[4..7].fill(0.0);
        }
        if !self.popularity {
            v.0[7] = 0.0;
        }
        v
    }
}

/// How the question and entity texts are split into terms.
#[derive(Debug, Clone, Copy)]
pub enum Tokenizer<'a> {
    /// Split on whitespace (corpora that are already space-tokenized).
    Whitespace,
    /// Forward maximum matching against the store's lexicon.
    Fmm(&'a KgStore),
}

impl Tokenizer<'_> {
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        match self {
            Tokenizer::Whitespace => text.split_whitespace().map(str::to_string).collect(),
            Tokenizer::Fmm(store) => segment_fmm(text, store)
                .into_iter()
                .map(|t| t.surface)
                .filter(|s| {
                    let n = normalize(s);
                    !n.is_empty() && n != "_"
                })
                .collect(),
        }
    }
}

/// Average-entity-length convention for the saturation denominator.
#[derive(Debug, Clone, Copy)]
pub enum AvgeMode {
    /// Mean term count over the current mention's candidate set.
    PerMention,
    /// A fixed corpus-level value (for example the KG-wide mean).
    Fixed(f64),
}

/// Everything needed to turn (question, entity) pairs into features.
pub struct SimilarityContext<'a> {
    pub models: &'a CorpusModels,
    pub embeddings: &'a EmbeddingTable,
    pub params: SemanticParams,
    pub avge_mode: AvgeMode,
    pub tokenizer: Tokenizer<'a>,
    pub groups: FeatureGroups,
}

/// Entities whose name or alias matches the mention surface, ordered
/// by id.
pub fn generate_el_candidates<'a>(surface: &str, store: &'a KgStore) -> Vec<&'a KgEntity> {
    store
        .lookup_surface(surface)
        .iter()
        .filter_map(|id| store.entity(id))
        .collect()
}

/// Name tokens plus tokens of every attribute value.
pub fn entity_terms(entity: &KgEntity, tokenizer: &Tokenizer) -> Vec<String> {
    let mut terms = tokenizer.tokenize(&entity.name);
    for value in entity.attributes.values() {
        terms.extend(tokenizer.tokenize(value));
    }
    terms
}

/// The 8-feature stack for one (question, entity) pair. `avge` is the
/// average entity term count used by the saturation denominator.
pub fn build_features(
    question_text: &str,
    entity: &KgEntity,
    ctx: &SimilarityContext,
    avge: f64,
) -> Result<ElFeatureVector> {
    let q_terms = ctx.tokenizer.tokenize(question_text);
    let e_terms = entity_terms(entity, &ctx.tokenizer);
    let semantic = semantic_similarity(
        &q_terms,
        &e_terms,
        ctx.embeddings,
        &ctx.models.idf,
        ctx.params,
        avge,
    )?;

    let name_terms = ctx.tokenizer.tokenize(&entity.name);
    let qen = text_similarities(ctx.models, &q_terms, &name_terms);

    let attr_terms: Vec<String> = entity
        .attributes
        .values()
        .flat_map(|v| ctx.tokenizer.tokenize(v))
        .collect();
    let qea = if attr_terms.is_empty() {
        [0.0; 3]
    } else {
        text_similarities(ctx.models, &q_terms, &attr_terms)
    };

    let v = ElFeatureVector([
        semantic,
        qen[0],
        qen[1],
        qen[2],
        qea[0],
        qea[1],
        qea[2],
        popularity_feature(entity),
    ]);
    Ok(ctx.groups.apply(v))
}

fn text_similarities(models: &CorpusModels, a: &[String], b: &[String]) -> [f64; 3] {
    if a.is_empty() || b.is_empty() {
        return [0.0; 3];
    }
    [
        models.tfidf_similarity(a, b),
        models.lsi_similarity(a, b),
        models.lda_similarity(a, b),
    ]
}

/// Candidates with features for one mention surface: candidate lookup,
/// the per-mention (or fixed) avge, then one vector per candidate.
pub fn mention_candidate_features(
    question_text: &str,
    surface: &str,
    store: &KgStore,
    ctx: &SimilarityContext,
) -> Result<Vec<(String, ElFeatureVector)>> {
    let candidates = generate_el_candidates(surface, store);
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let avge = match ctx.avge_mode {
        AvgeMode::Fixed(v) => v,
        AvgeMode::PerMention => {
            let total: usize = candidates
                .iter()
                .map(|e| entity_terms(e, &ctx.tokenizer).len())
                .sum();
            (total as f64 / candidates.len() as f64).max(1.0)
        }
    };
    candidates
        .into_iter()
        .map(|e| Ok((e.id.clone(), build_features(question_text, e, ctx, avge)?)))
        .collect()
}

/// Mean entity term count over the whole KG (the fixed-avge convention).
pub fn kg_mean_entity_length(store: &KgStore, tokenizer: &Tokenizer) -> f64 {
    let mut total = 0usize;
    let mut count = 0usize;
    for e in store.entities() {
        total += entity_terms(e, tokenizer).len();
        count += 1;
    }
    if count == 0 {
        1.0
    } else {
        (total as f64 / count as f64).max(1.0)
    }
}

/// One gold candidate against its negatives.
#[derive(Debug, Clone)]
pub struct RankExample {
    pub gold: ElFeatureVector,
    pub negatives: Vec<ElFeatureVector>,
}

#[derive(Debug, Clone)]
pub struct RankerConfig {
    pub lambda: f64,
    pub epochs: u32,
    pub eta0: f64,
    pub seed: u64,
}

impl Default for RankerConfig {
    fn default() -> Self {
        RankerConfig {
            lambda: 1e-3,
            epochs: 200,
            eta0: 0.1,
            seed: 11,
        }
    }
}

/// Linear ranking model with stored normalization statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankModel {
    pub weights: [f64; EL_FEATURE_COUNT],
    pub feature_names: Vec<String>,
    pub means: [f64; EL_FEATURE_COUNT],
    pub stds: [f64; EL_FEATURE_COUNT],
    pub lambda: f64,
    pub epochs: u32,
    pub eta0: f64,
    pub seed: u64,
    pub final_loss: f64,
}

impl RankModel {
    fn normalize_vec(&self, x: &ElFeatureVector) -> [f64; EL_FEATURE_COUNT] {
        std::array::from_fn(|i| (x.0[i] - self.means[i]) / self.stds[i])
    }

    pub fn score(&self, x: &ElFeatureVector) -> f64 {
        let z = self.normalize_vec(x);
        self.weights.iter().zip(z).map(|(w, v)| w * v).sum()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = RankModelFile {
            version: MODEL_VERSION,
            model: self.clone(),
        };
        let json = serde_json::to_string(&file).map_err(|e| Error::Model(e.to_string()))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: RankModelFile =
            serde_json::from_str(&data).map_err(|e| Error::Model(e.to_string()))?;
        if file.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported ranking model version {} (expected {MODEL_VERSION})",
                file.version
            )));
        }
        let expected: Vec<String> = EL_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        if file.model.feature_names != expected {
            return Err(Error::Model(format!(
                "feature layout {:?} does not match {:?}",
                file.model.feature_names, expected
            )));
        }
        if file.model.stds.iter().any(|&s| s <= 0.0)
            || !file.model.weights.iter().all(|w| w.is_finite())
        {
            return Err(Error::Model("corrupt ranking model".into()));
        }
        Ok(file.model)
    }
}

#[derive(Serialize, Deserialize)]
struct RankModelFile {
    version: u32,
    model: RankModel,
}

/// Full-dataset pairwise hinge loss and its subgradient:
/// `Σ_pairs max(0, 1 − w·d) + λ‖w‖²` over difference vectors
/// `d = gold − negative` (already normalized).
pub fn pairwise_loss_and_grad(
    pairs: &[[f64; EL_FEATURE_COUNT]],
    weights: &[f64; EL_FEATURE_COUNT],
    lambda: f64,
) -> (f64, [f64; EL_FEATURE_COUNT]) {
    let mut loss = 0.0;
    let mut grad = [0.0; EL_FEATURE_COUNT];
    for d in pairs {
        let margin: f64 = 1.0 - weights.iter().zip(d).map(|(w, x)| w * x).sum::<f64>();
        if margin > 0.0 {
            loss += margin;
            for i in 0..EL_FEATURE_COUNT {
                grad[i] -= d[i];
            }
        }
    }
    for i in 0..EL_FEATURE_COUNT {
        loss += lambda * weights[i] * weights[i];
        grad[i] += 2.0 * lambda * weights[i];
    }
    (loss, grad)
}

/// Train by stochastic subgradient descent over shuffled pairs with the
/// diminishing schedule `η_t = η₀ / (1 + t/epochs)` and a proximal
/// shrink for the L2 term after each epoch. Returns the model and the
/// per-epoch loss history (entry 0 is the loss at zero weights).
pub fn train_ranker_with_history(
    dataset: &[RankExample],
    config: &RankerConfig,
) -> Result<(RankModel, Vec<f64>)> {
    if dataset.is_empty() {
        return Err(Error::invalid("ranking dataset is empty"));
    }
    if dataset.iter().any(|ex| {
        ex.gold.0.iter().any(|v| !v.is_finite())
            || ex.negatives.iter().any(|n| n.0.iter().any(|v| !v.is_finite()))
    }) {
        return Err(Error::invalid("non-finite feature value in dataset"));
    }

    // Normalization statistics over every vector in the dataset.
    let all: Vec<&ElFeatureVector> = dataset
        .iter()
        .flat_map(|ex| std::iter::once(&ex.gold).chain(ex.negatives.iter()))
        .collect();
    let n = all.len() as f64;
    let mut means = [0.0; EL_FEATURE_COUNT];
    for v in &all {
        for (m, x) in means.iter_mut().zip(v.0) {
            *m += x;
        }
    }
    for m in means.iter_mut() {
        *m /= n;
    }
    let mut stds = [0.0; EL_FEATURE_COUNT];
    for v in &all {
        for ((s, x), m) in stds.iter_mut().zip(v.0).zip(means) {
            *s += (x - m).powi(2);
        }
    }
    for s in stds.iter_mut() {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let norm = |x: &ElFeatureVector| -> [f64; EL_FEATURE_COUNT] {
        std::array::from_fn(|i| (x.0[i] - means[i]) / stds[i])
    };

    let mut pairs: Vec<[f64; EL_FEATURE_COUNT]> = Vec::new();
    for ex in dataset {
        let g = norm(&ex.gold);
        for neg in &ex.negatives {
            let nn = norm(neg);
            let mut d = [0.0; EL_FEATURE_COUNT];
            for i in 0..EL_FEATURE_COUNT {
                d[i] = g[i] - nn[i];
            }
            pairs.push(d);
        }
    }

    let mut weights = [0.0; EL_FEATURE_COUNT];
    let mut history = vec![pairwise_loss_and_grad(&pairs, &weights, config.lambda).0];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    for epoch in 0..config.epochs {
        let eta = config.eta0 / (1.0 + epoch as f64 / config.epochs.max(1) as f64);
        order.shuffle(&mut rng);
        for &p in &order {
            let d = &pairs[p];
            let margin: f64 = 1.0 - weights.iter().zip(d).map(|(w, x)| w * x).sum::<f64>();
            if margin > 0.0 {
                for i in 0..EL_FEATURE_COUNT {
                    weights[i] += eta * d[i];
                }
            }
        }
        let shrink = 1.0 / (1.0 + 2.0 * eta * config.lambda);
        for w in weights.iter_mut() {
            *w *= shrink;
        }
        history.push(pairwise_loss_and_grad(&pairs, &weights, config.lambda).0);
    }

    let model = RankModel {
        weights,
        feature_names: EL_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        means,
        stds,
        lambda: config.lambda,
        epochs: config.epochs,
        eta0: config.eta0,
        seed: config.seed,
        final_loss: *history.last().unwrap(),
    };
    Ok((model, history))
}

pub fn train_ranker(dataset: &[RankExample], config: &RankerConfig) -> Result<RankModel> {
    train_ranker_with_history(dataset, config).map(|(m, _)| m)
}

/// Score and sort candidates: descending score, exact ties broken by
/// entity id ascending. Input order never matters.
pub fn rank_candidates(
    model: &RankModel,
    candidates: &[(String, ElFeatureVector)],
) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = candidates
        .iter()
        .map(|(id, x)| (id.clone(), model.score(x)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    scored
}

/// One line of the linking output JSONL.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkRecord {
    pub question_id: String,
    pub mention: Mention,
    pub ranked: Vec<RankedEntity>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankedEntity {
    pub entity_id: String,
    pub score: f64,
}
