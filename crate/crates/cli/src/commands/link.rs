use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;
use rayon::prelude::*;
use serde::Serialize;

use qedl_core::qed::{DiscoveryRecord, Mention};
use qedl_core::ranker::{
    kg_mean_entity_length, mention_candidate_features, rank_candidates, AvgeMode, ElFeatureVector,
    FeatureGroups, RankModel, SimilarityContext,
};
use qedl_core::similarity::{EmbeddingTable, SemanticParams};

use crate::commands::{load_or_fit_similarity, load_question_file, load_store, tokenizer, write_output};
use crate::config::{Manifest, PipelineConfig};

#[derive(Parser)]
pub struct Args {
    /// Discovery output to link (mentions JSONL).
    #[arg(long)]
    pub mentions: PathBuf,
    /// Trained ranking model.
    #[arg(long)]
    pub rank_model: PathBuf,
    /// Feature groups to keep; the rest are zeroed.
    #[arg(long)]
    pub features: Option<String>,
    /// Include each candidate's feature vector in the output.
    #[arg(long)]
    pub emit_features: bool,
    /// Output JSONL (default: <output_dir>/links.jsonl).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// One output line per mention; `features` is present only with
/// `--emit-features`.
#[derive(Serialize)]
struct LinkLine {
    question_id: String,
    mention: Mention,
    ranked: Vec<RankedLine>,
}

#[derive(Serialize)]
struct RankedLine {
    entity_id: String,
    score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    features: Option<ElFeatureVector>,
}

pub fn run(config: PipelineConfig, args: Args, jobs: usize) -> Result<()> {
    let store = load_store(&config)?;
    let questions_path = PipelineConfig::require(&config.paths.questions, "questions")?;
    let questions = load_question_file(&questions_path)?;
    let by_id: HashMap<&str, &str> = questions
        .iter()
        .map(|q| (q.id.as_str(), q.text.as_str()))
        .collect();

    let embeddings_path = PipelineConfig::require(&config.paths.embeddings, "embeddings")?;
    let embeddings = EmbeddingTable::load(&embeddings_path)
        .with_context(|| format!("loading embeddings {}", embeddings_path.display()))?;
    let models = load_or_fit_similarity(&config, &store)?;
    let rank_model = RankModel::load(&args.rank_model)
        .with_context(|| format!("loading ranking model {}", args.rank_model.display()))?;

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

    let data = fs::read_to_string(&args.mentions)
        .with_context(|| format!("reading mentions {}", args.mentions.display()))?;
    let mut records: Vec<DiscoveryRecord> = Vec::new();
    for (lineno, line) in data.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: DiscoveryRecord = serde_json::from_str(line).with_context(|| {
            format!("invalid mention record at {}:{}", args.mentions.display(), lineno + 1)
        })?;
        if !by_id.contains_key(record.id.as_str()) {
            bail!(
                "mention record at {}:{} names unknown question {:?}",
                args.mentions.display(),
                lineno + 1,
                record.id
            );
        }
        records.push(record);
    }

    let link_one = |record: &DiscoveryRecord| -> Result<Vec<LinkLine>> {
        let text = by_id[record.id.as_str()];
        record
            .mentions
            .iter()
            .map(|m| {
                let cands = mention_candidate_features(text, &m.surface, &store, &ctx)
                    .with_context(|| format!("features for question {:?}", record.id))?;
                let feature_by_id: HashMap<&str, ElFeatureVector> =
                    cands.iter().map(|(id, f)| (id.as_str(), *f)).collect();
                let ranked = rank_candidates(&rank_model, &cands)
                    .into_iter()
                    .map(|(entity_id, score)| {
                        let features = args
                            .emit_features
                            .then(|| feature_by_id[entity_id.as_str()]);
                        RankedLine {
                            entity_id,
                            score,
                            features,
                        }
                    })
                    .collect();
                Ok(LinkLine {
                    question_id: record.id.clone(),
                    mention: m.clone(),
                    ranked,
                })
            })
            .collect()
    };

    let lines: Result<Vec<Vec<LinkLine>>> = if jobs > 1 {
        records.par_iter().map(link_one).collect()
    } else {
        records.iter().map(link_one).collect()
    };

    let mut out = String::new();
    let mut mention_count = 0usize;
    for line in lines?.into_iter().flatten() {
        mention_count += 1;
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    let out_path = match args.out {
        Some(p) => p,
        None => config.output_dir()?.join("links.jsonl"),
    };
    write_output(&out_path, &out)?;
    if let Ok(dir) = config.output_dir() {
        Manifest::update(&dir, "link", &config)?;
    }
    println!("linked {mention_count} mentions -> {}", out_path.display());
    Ok(())
}
