use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use qedl_core::crf::{CrfTrainConfig, FeatureColumns};
use qedl_core::eval::train_qed_model_logged;

use crate::commands::{load_df_table, load_question_file, load_store, write_output};
use crate::config::{Manifest, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Character, boundary, POS, stopword, and DF columns.
    Crf,
    /// Same plus the KG-retrieval tag column.
    Ensemble,
}

#[derive(Parser)]
pub struct Args {
    /// Which feature columns to train with.
    #[arg(long, value_enum, default_value_t = Method::Ensemble)]
    pub method: Method,
    #[arg(long)]
    pub epochs: Option<u32>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model output (default: <output_dir>/crf-<method>.json).
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

pub fn run(mut config: PipelineConfig, args: Args) -> Result<()> {
    if let Some(v) = args.epochs {
        config.crf.epochs = v;
    }
    if let Some(v) = args.lambda {
        config.crf.lambda = v;
    }
    if let Some(v) = args.seed {
        config.crf.seed = v;
    }
    config.validate()?;

    let store = load_store(&config)?;
    let questions_path = PipelineConfig::require(&config.paths.questions, "questions")?;
    let questions = load_question_file(&questions_path)?;
    let df = load_df_table(&config, &store, &questions)?;

    let method_name = match args.method {
        Method::Crf => "crf",
        Method::Ensemble => "ensemble",
    };
    let train_config = CrfTrainConfig {
        lambda: config.crf.lambda,
        epochs: config.crf.epochs,
        learning_rate: config.crf.learning_rate,
        seed: config.crf.seed,
        columns: match args.method {
            Method::Crf => FeatureColumns::plain(),
            Method::Ensemble => FeatureColumns::ensemble(),
        },
        max_n: config.crf.max_n,
        df_buckets: config.crf.df_buckets,
    };
    let (model, history) = train_qed_model_logged(&questions, &store, &df, &train_config)
        .context("training the discovery CRF")?;

    if config.crf.epochs == 0 {
        eprintln!("warning: epochs = 0, emitting a zero-weight model");
    }

    let out_dir = config.output_dir()?;
    let model_path = args
        .model_out
        .unwrap_or_else(|| out_dir.join(format!("crf-{method_name}.json")));
    if let Some(parent) = model_path.parent() {
        std::fs::create_dir_all(parent).ok();
    }
    model
        .save(&model_path)
        .with_context(|| format!("writing model {}", model_path.display()))?;

    let mut log = String::new();
    for (epoch, objective) in history.iter().enumerate() {
        writeln!(log, "{epoch}\t{objective}").unwrap();
    }
    write_output(&out_dir.join(format!("train-qed-{method_name}.log")), &log)?;

    Manifest::update(&out_dir, "train-qed", &config)?;
    println!(
        "trained {method_name} model on {} questions ({} features), objective {:.4} -> {}",
        questions.len(),
        model.feature_ids.len(),
        model.final_objective,
        model_path.display()
    );
    Ok(())
}
