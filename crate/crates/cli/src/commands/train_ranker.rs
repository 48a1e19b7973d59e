use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;

use qedl_core::ranker::{
    kg_mean_entity_length, mention_candidate_features, train_ranker_with_history, AvgeMode,
    FeatureGroups, RankExample, RankerConfig, SimilarityContext,
};
use qedl_core::similarity::{EmbeddingTable, SemanticParams};

use crate::commands::{load_or_fit_similarity, load_question_file, load_store, tokenizer, write_output};
use crate::config::{Manifest, PipelineConfig};

#[derive(Parser)]
pub struct Args {
    /// Comma-separated feature groups to keep (semantic, ts_qen, ts_qea,
    /// popularity); the rest are zeroed.
    #[arg(long)]
    pub features: Option<String>,
    #[arg(long)]
    pub epochs: Option<u32>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model output (default: <output_dir>/ranker.json).
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

pub fn run(mut config: PipelineConfig, args: Args) -> Result<()> {
    if let Some(v) = args.epochs {
        config.ranker.epochs = v;
    }
    if let Some(v) = args.lambda {
        config.ranker.lambda = v;
    }
    if let Some(v) = args.seed {
        config.ranker.seed = v;
    }
    config.validate()?;

    let store = load_store(&config)?;
    let questions_path = PipelineConfig::require(&config.paths.questions, "questions")?;
    let questions = load_question_file(&questions_path)?;
    let embeddings_path = PipelineConfig::require(&config.paths.embeddings, "embeddings")?;
    let embeddings = EmbeddingTable::load(&embeddings_path)
        .with_context(|| format!("loading embeddings {}", embeddings_path.display()))?;
    let models = load_or_fit_similarity(&config, &store)?;

    let groups = match &args.features {
        Some(spec) => FeatureGroups::parse(spec)?,
        None => FeatureGroups::default(),
    };
    let tok = tokenizer(&config, &store);
    let avge_mode = if config.similarity.avge_mode == "kg_global" {
        AvgeMode::Fixed(kg_mean_entity_length(&store, &tok))
    } else {
        AvgeMode::PerMention
    };
    let ctx = SimilarityContext {
        models: &models,
        embeddings: &embeddings,
        params: SemanticParams {
            k1: config.similarity.k1,
            b: config.similarity.b,
        },
        avge_mode,
        tokenizer: tok,
        groups,
    };

    // Gold mentions whose entity is among the candidates become training
    // examples; the rest are skipped (and count as errors at eval time).
    let mut dataset = Vec::new();
    let mut skipped = 0usize;
    for q in &questions {
        for g in &q.entities {
            let cands = mention_candidate_features(&q.text, &g.mention, &store, &ctx)
                .with_context(|| format!("features for question {:?}", q.id))?;
            let gold = cands.iter().find(|(id, _)| *id == g.kb_id).map(|(_, f)| *f);
            match gold {
                None => skipped += 1,
                Some(gold) => {
                    let negatives = cands
                        .iter()
                        .filter(|(id, _)| *id != g.kb_id)
                        .map(|(_, f)| *f)
                        .collect();
                    dataset.push(RankExample { gold, negatives });
                }
            }
        }
    }

    let ranker_config = RankerConfig {
        lambda: config.ranker.lambda,
        epochs: config.ranker.epochs,
        eta0: config.ranker.eta0,
        seed: config.ranker.seed,
    };
    let (model, history) =
        train_ranker_with_history(&dataset, &ranker_config).context("training the ranker")?;

    let out_dir = config.output_dir()?;
    let model_path = args.model_out.unwrap_or_else(|| out_dir.join("ranker.json"));
    if let Some(parent) = model_path.parent() {
        std::fs::create_dir_all(parent).ok();
    }
    model
        .save(&model_path)
        .with_context(|| format!("writing model {}", model_path.display()))?;

    let mut log = String::new();
    for (epoch, loss) in history.iter().enumerate() {
        log.push_str(&format!("{epoch}\t{loss}\n"));
    }
    write_output(&out_dir.join("train-ranker.log"), &log)?;
    Manifest::update(&out_dir, "train-ranker", &config)?;

    println!(
        "trained ranker on {} mentions ({} skipped, final loss {:.4}) -> {}",
        dataset.len(),
        skipped,
        model.final_loss,
        model_path.display()
    );
    Ok(())
}
