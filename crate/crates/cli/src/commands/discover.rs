use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use rayon::prelude::*;

use qedl_core::crf::CrfModel;
use qedl_core::qed::{discover_crf, discover_kg, one_step_iteration, DiscoveryRecord};
use qedl_core::segmentation::CandidateConfig;

use crate::commands::{load_df_table, load_question_file, load_store, write_output};
use crate::config::{Manifest, PipelineConfig};

#[derive(Parser)]
pub struct Args {
    /// Trained CRF model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Skip the lexicon-checked union with KG retrieval.
    #[arg(long)]
    pub no_iteration: bool,
    /// Questions to process (overrides paths.questions).
    #[arg(long)]
    pub questions: Option<PathBuf>,
    /// Output JSONL (default: <output_dir>/mentions.jsonl).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(config: PipelineConfig, args: Args, jobs: usize) -> Result<()> {
    let store = load_store(&config)?;
    let model = CrfModel::load(&args.model)
        .with_context(|| format!("loading CRF model {}", args.model.display()))?;
    let questions_path = match &args.questions {
        Some(p) => p.clone(),
        None => PipelineConfig::require(&config.paths.questions, "questions")?,
    };
    let questions = load_question_file(&questions_path)?;
    let df = load_df_table(&config, &store, &questions)?;
    let candidate_config = CandidateConfig {
        max_n: model.max_n,
        ..CandidateConfig::default()
    };

    let process = |q: &qedl_core::question::Question| -> Result<DiscoveryRecord> {
        let crf_mentions = discover_crf(&q.text, &model, &store, &df)
            .with_context(|| format!("decoding question {:?}", q.id))?;
        let mentions = if args.no_iteration {
            crf_mentions
        } else {
            let kg_mentions = discover_kg(&q.text, &store, &candidate_config);
            one_step_iteration(&crf_mentions, &kg_mentions, &store)
        };
        Ok(DiscoveryRecord {
            id: q.id.clone(),
            mentions,
        })
    };

    let records: Result<Vec<DiscoveryRecord>> = if jobs > 1 {
        questions.par_iter().map(process).collect()
    } else {
        questions.iter().map(process).collect()
    };
    let records = records?;

    let mut out = String::new();
    for record in &records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    let out_path = match args.out {
        Some(p) => p,
        None => config.output_dir()?.join("mentions.jsonl"),
    };
    write_output(&out_path, &out)?;
    if let Ok(dir) = config.output_dir() {
        Manifest::update(&dir, "discover", &config)?;
    }
    let total: usize = records.iter().map(|r| r.mentions.len()).sum();
    println!(
        "discovered {total} mentions over {} questions -> {}",
        records.len(),
        out_path.display()
    );
    Ok(())
}
