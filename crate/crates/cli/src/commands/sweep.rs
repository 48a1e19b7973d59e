use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qedl_core::crf::{CrfTrainConfig, FeatureColumns};
use qedl_core::eval::{convergence_sweep, QedMethod};

use crate::commands::{load_df_table, load_question_file, load_store, write_output};
use crate::config::{Manifest, PipelineConfig};

#[derive(Parser)]
pub struct Args {
    /// Comma-separated training-set sizes, e.g. `50,100,150`.
    #[arg(long)]
    pub sizes: String,
    /// Held-out fraction (overrides sweep.holdout_fraction).
    #[arg(long)]
    pub holdout: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output (default: <output_dir>/sweep.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(mut config: PipelineConfig, args: Args) -> Result<()> {
    if let Some(v) = args.holdout {
        config.sweep.holdout_fraction = v;
    }
    if let Some(v) = args.seed {
        config.sweep.seed = v;
    }
    config.validate()?;

    let sizes: Vec<usize> = args
        .sizes
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .with_context(|| format!("invalid sweep size {s:?}"))
        })
        .collect::<Result<_>>()?;
    if sizes.is_empty() {
        bail!("at least one sweep size is required");
    }

    let store = load_store(&config)?;
    let questions_path = PipelineConfig::require(&config.paths.questions, "questions")?;
    let mut questions = load_question_file(&questions_path)?;
    let df = load_df_table(&config, &store, &questions)?;

    // One seeded shuffle; the tail becomes the fixed held-out split.
    let mut rng = ChaCha8Rng::seed_from_u64(config.sweep.seed);
    questions.shuffle(&mut rng);
    let heldout_len = ((questions.len() as f64 * config.sweep.holdout_fraction).ceil() as usize)
        .clamp(1, questions.len().saturating_sub(1));
    let split = questions.len() - heldout_len;
    let (pool, heldout) = questions.split_at(split);

    let train_config = CrfTrainConfig {
        lambda: config.crf.lambda,
        epochs: config.crf.epochs,
        learning_rate: config.crf.learning_rate,
        seed: config.crf.seed,
        columns: FeatureColumns::plain(),
        max_n: config.crf.max_n,
        df_buckets: config.crf.df_buckets,
    };
    let report = convergence_sweep(
        pool,
        heldout,
        &sizes,
        &[QedMethod::Crf, QedMethod::Ensemble],
        &store,
        &df,
        &train_config,
        config.sweep.seed,
    )
    .context("running the convergence sweep")?;

    let out_dir = config.output_dir()?;
    let csv_path = args.out.unwrap_or_else(|| out_dir.join("sweep.csv"));
    write_output(&csv_path, &report.to_csv())?;
    write_output(
        &out_dir.join("sweep.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    let mut text = format!(
        "{:>6}  {:<9} {:>9} {:>9} {:>9}\n",
        "size", "method", "precision", "recall", "f1"
    );
    for r in &report.rows {
        text.push_str(&format!(
            "{:>6}  {:<9} {:>9.4} {:>9.4} {:>9.4}\n",
            r.size,
            r.method.as_str(),
            r.precision,
            r.recall,
            r.f1
        ));
    }
    write_output(&out_dir.join("sweep.txt"), &text)?;
    Manifest::update(&out_dir, "sweep", &config)?;
    print!("{text}");
    println!("csv -> {}", csv_path.display());
    Ok(())
}
