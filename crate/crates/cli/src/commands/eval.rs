use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;
use serde::{Deserialize, Serialize};

use qedl_core::eval::{el_accuracy, overall_metrics, qed_metrics};
use qedl_core::question::Question;
use qedl_core::ranker::LinkRecord;

use crate::commands::{load_question_file, write_output};
use crate::config::{Manifest, PipelineConfig};

#[derive(Parser)]
pub struct Args {
    /// Linking output to score (links JSONL).
    #[arg(long)]
    pub predictions: PathBuf,
    /// Gold questions (overrides paths.questions).
    #[arg(long)]
    pub gold: Option<PathBuf>,
}

/// Linking accuracy over correctly-recognized mentions.
#[derive(Debug, Serialize, Deserialize)]
struct ElReport {
    accuracy: f64,
    evaluated: usize,
    correct: usize,
}

pub fn run(config: PipelineConfig, args: Args) -> Result<()> {
    let gold_path = match &args.gold {
        Some(p) => p.clone(),
        None => PipelineConfig::require(&config.paths.questions, "questions")?,
    };
    let gold = load_question_file(&gold_path)?;
    let gold_by_id: HashMap<&str, &Question> = gold.iter().map(|q| (q.id.as_str(), q)).collect();

    let data = fs::read_to_string(&args.predictions)
        .with_context(|| format!("reading predictions {}", args.predictions.display()))?;
    let mut by_question: HashMap<String, Vec<LinkRecord>> = HashMap::new();
    for (lineno, line) in data.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: LinkRecord = serde_json::from_str(line).with_context(|| {
            format!(
                "invalid prediction record at {}:{}",
                args.predictions.display(),
                lineno + 1
            )
        })?;
        if !gold_by_id.contains_key(record.question_id.as_str()) {
            bail!(
                "prediction record at {}:{} names unknown question {:?}",
                args.predictions.display(),
                lineno + 1,
                record.question_id
            );
        }
        by_question
            .entry(record.question_id.clone())
            .or_default()
            .push(record);
    }

    let empty: Vec<LinkRecord> = Vec::new();
    let mut qed_pairs = Vec::new();
    let mut overall_pairs = Vec::new();
    let mut el_items: Vec<(Option<String>, String)> = Vec::new();
    for q in &gold {
        let records = by_question.get(q.id.as_str()).unwrap_or(&empty);
        let pred_spans: Vec<(usize, usize)> =
            records.iter().map(|r| (r.mention.start, r.mention.end)).collect();
        let gold_spans: Vec<(usize, usize)> =
            q.entities.iter().map(|g| (g.start, g.end)).collect();

        // Correctly-recognized mentions, matched one-to-one to gold.
        let mut consumed = vec![false; q.entities.len()];
        for record in records.iter() {
            let span = (record.mention.start, record.mention.end);
            let slot = q
                .entities
                .iter()
                .enumerate()
                .find(|(gi, g)| !consumed[*gi] && (g.start, g.end) == span);
            if let Some((gi, g)) = slot {
                consumed[gi] = true;
                let top1 = record.ranked.first().map(|r| r.entity_id.clone());
                el_items.push((top1, g.kb_id.clone()));
            }
        }

        let pred_links: Vec<((usize, usize), Option<String>)> = records
            .iter()
            .map(|r| {
                (
                    (r.mention.start, r.mention.end),
                    r.ranked.first().map(|e| e.entity_id.clone()),
                )
            })
            .collect();
        let gold_links: Vec<((usize, usize), String)> = q
            .entities
            .iter()
            .map(|g| ((g.start, g.end), g.kb_id.clone()))
            .collect();

        qed_pairs.push((pred_spans, gold_spans));
        overall_pairs.push((pred_links, gold_links));
    }

    let qed_report = qed_metrics(&qed_pairs);
    let el_report = ElReport {
        accuracy: el_accuracy(&el_items),
        evaluated: el_items.len(),
        correct: el_items
            .iter()
            .filter(|(t, g)| t.as_deref() == Some(g.as_str()))
            .count(),
    };
    let overall_report = overall_metrics(&overall_pairs);

    let out_dir = config.output_dir()?;
    write_output(
        &out_dir.join("eval_qed.json"),
        &serde_json::to_string_pretty(&qed_report)?,
    )?;
    write_output(&out_dir.join("eval_qed.txt"), &qed_report.to_text("discovery"))?;
    write_output(
        &out_dir.join("eval_el.json"),
        &serde_json::to_string_pretty(&el_report)?,
    )?;
    let el_text = format!(
        "linking (correctly-recognized mentions)\n  accuracy   {:>8.4}  ({}/{})\n",
        el_report.accuracy, el_report.correct, el_report.evaluated
    );
    write_output(&out_dir.join("eval_el.txt"), &el_text)?;
    write_output(
        &out_dir.join("eval_overall.json"),
        &serde_json::to_string_pretty(&overall_report)?,
    )?;
    write_output(
        &out_dir.join("eval_overall.txt"),
        &overall_report.to_text("end-to-end"),
    )?;
    Manifest::update(&out_dir, "eval", &config)?;

    print!("{}", qed_report.to_text("discovery"));
    print!("{el_text}");
    print!("{}", overall_report.to_text("end-to-end"));
    Ok(())
}
