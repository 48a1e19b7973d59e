//! Evaluation protocol: discovery precision/recall/F1 by exact span
//! match, linking accuracy over correctly-recognized mentions, end-to-end
//! metrics, and the training-size convergence sweep.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crf::{bioes_encode, extract_features, train_crf_with_history, CrfTrainConfig};
use crate::error::{Error, Result};
use crate::kg_store::KgStore;
use crate::qed::{discover_crf, discover_kg, Mention};
use crate::question::Question;
use crate::segmentation::{generate_candidates, segment_fmm, CandidateConfig};
use crate::similarity::IdfTable;

/// Character span, end exclusive.
pub type Span = (usize, usize);
/// Predicted span with its top-1 entity id (None = empty candidate set).
pub type LinkedSpan = (Span, Option<String>);
/// Gold span with its entity id.
pub type GoldLink = (Span, String);

/// Precision/recall/F1 with the underlying counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QedReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub predicted: usize,
    pub gold: usize,
    pub correct: usize,
}

impl QedReport {
    fn from_counts(predicted: usize, gold: usize, correct: usize) -> Self {
        let precision = ratio(correct, predicted);
        let recall = ratio(correct, gold);
        QedReport {
            precision,
            recall,
            f1: f1_score(precision, recall),
            predicted,
            gold,
            correct,
        }
    }

    /// Aligned-column text rendering.
    pub fn to_text(&self, title: &str) -> String {
        format!(
            "{title}\n  precision  {:>8.4}  ({}/{})\n  recall     {:>8.4}  ({}/{})\n  f1         {:>8.4}\n",
            self.precision,
            self.correct,
            self.predicted,
            self.recall,
            self.correct,
            self.gold,
            self.f1
        )
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Micro-averaged span metrics. Each item pairs one question's predicted
/// spans with its gold spans; a prediction is correct when its (start,
/// end) exactly equals a gold span, matched one-to-one.
pub fn qed_metrics(per_question: &[(Vec<Span>, Vec<Span>)]) -> QedReport {
    let mut predicted = 0;
    let mut gold = 0;
    let mut correct = 0;
    for (pred, gold_spans) in per_question {
        predicted += pred.len();
        gold += gold_spans.len();
        let mut remaining: HashMap<Span, usize> = HashMap::new();
        for &g in gold_spans {
            *remaining.entry(g).or_insert(0) += 1;
        }
        for p in pred {
            if let Some(count) = remaining.get_mut(p) {
                if *count > 0 {
                    *count -= 1;
                    correct += 1;
                }
            }
        }
    }
    QedReport::from_counts(predicted, gold, correct)
}

/// Accuracy over correctly-recognized mentions: each item is the top-1
/// entity id (None when the candidate set was empty) and the gold id.
/// Empty input scores 0 by the zero-division rule.
pub fn el_accuracy(items: &[(Option<String>, String)]) -> f64 {
    if items.is_empty() {
        return 0.0;
    }
    let correct = items
        .iter()
        .filter(|(top1, gold)| top1.as_deref() == Some(gold.as_str()))
        .count();
    correct as f64 / items.len() as f64
}

/// End-to-end metrics: a prediction is correct when span and linked
/// entity id both match a gold annotation, one-to-one.
pub fn overall_metrics(per_question: &[(Vec<LinkedSpan>, Vec<GoldLink>)]) -> QedReport {
    let mut predicted = 0;
    let mut gold = 0;
    let mut correct = 0;
    for (pred, gold_links) in per_question {
        predicted += pred.len();
        gold += gold_links.len();
        let mut remaining: HashMap<(Span, &str), usize> = HashMap::new();
        for (span, id) in gold_links {
            *remaining.entry((*span, id.as_str())).or_insert(0) += 1;
        }
        for (span, top1) in pred {
            if let Some(id) = top1 {
                if let Some(count) = remaining.get_mut(&(*span, id.as_str())) {
                    if *count > 0 {
                        *count -= 1;
                        correct += 1;
                    }
                }
            }
        }
    }
    QedReport::from_counts(predicted, gold, correct)
}

/// Discovery strategies compared by the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QedMethod {
    Crf,
    Ensemble,
}

impl QedMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            QedMethod::Crf => "crf",
            QedMethod::Ensemble => "ensemble",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: usize,
    pub method: QedMethod,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,method,precision,recall,f1\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6}\n",
                r.size,
                r.method.as_str(),
                r.precision,
                r.recall,
                r.f1
            ));
        }
        out
    }
}

/// Gold observation/label pairs for one set of questions.
fn build_training_corpus(
    questions: &[Question],
    store: &KgStore,
    df: &IdfTable,
    config: &CrfTrainConfig,
) -> Result<Vec<(Vec<crate::crf::CharObservation>, Vec<crate::crf::Label>)>> {
    let candidate_config = CandidateConfig {
        max_n: config.max_n,
        ..CandidateConfig::default()
    };
    questions
        .iter()
        .filter(|q| !q.text.is_empty())
        .map(|q| {
            let tokens = segment_fmm(&q.text, store);
            let kg_spans = if config.columns.kg_tag {
                generate_candidates(&q.text, &tokens, store, &candidate_config)
            } else {
                Vec::new()
            };
            let obs = extract_features(
                &q.text,
                &tokens,
                &kg_spans,
                df.counts(),
                store.stopwords(),
                config.df_buckets,
            );
            let spans: Vec<(usize, usize)> =
                q.entities.iter().map(|g| (g.start, g.end)).collect();
            let labels = bioes_encode(q.text.chars().count(), &spans).map_err(|e| {
                Error::invalid(format!("question {:?}: {e}", q.id))
            })?;
            Ok((obs, labels))
        })
        .collect()
}

/// Train a CRF on gold-annotated questions with the given method's
/// feature columns.
pub fn train_qed_model(
    questions: &[Question],
    store: &KgStore,
    df: &IdfTable,
    config: &CrfTrainConfig,
) -> Result<crate::crf::CrfModel> {
    train_qed_model_logged(questions, store, df, config).map(|(m, _)| m)
}

/// As [`train_qed_model`], also returning the per-epoch objective
/// history for the training log.
pub fn train_qed_model_logged(
    questions: &[Question],
    store: &KgStore,
    df: &IdfTable,
    config: &CrfTrainConfig,
) -> Result<(crate::crf::CrfModel, Vec<f64>)> {
    let corpus = build_training_corpus(questions, store, df, config)?;
    train_crf_with_history(&corpus, config)
}

/// Decode every question and score against gold spans.
pub fn evaluate_crf_model(
    model: &crate::crf::CrfModel,
    questions: &[Question],
    store: &KgStore,
    df: &IdfTable,
) -> Result<QedReport> {
    let mut per_question = Vec::with_capacity(questions.len());
    for q in questions {
        let mentions = discover_crf(&q.text, model, store, df)?;
        per_question.push((
            mentions.iter().map(Mention::span).collect(),
            q.entities.iter().map(|g| (g.start, g.end)).collect(),
        ));
    }
    Ok(qed_metrics(&per_question))
}

/// Score pure KG retrieval against gold spans.
pub fn evaluate_kg_retrieval(
    questions: &[Question],
    store: &KgStore,
    config: &CandidateConfig,
) -> QedReport {
    let per_question: Vec<_> = questions
        .iter()
        .map(|q| {
            let mentions = discover_kg(&q.text, store, config);
            (
                mentions.iter().map(Mention::span).collect(),
                q.entities.iter().map(|g| (g.start, g.end)).collect(),
            )
        })
        .collect();
    qed_metrics(&per_question)
}

/// For each training-set size (a prefix of one seed-shuffled pool) and
/// method, train and evaluate on the fixed held-out split.
#[allow(clippy::too_many_arguments)]
pub fn convergence_sweep(
    pool: &[Question],
    heldout: &[Question],
    sizes: &[usize],
    methods: &[QedMethod],
    store: &KgStore,
    df: &IdfTable,
    base_config: &CrfTrainConfig,
    seed: u64,
) -> Result<SweepReport> {
    let mut sizes: Vec<usize> = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if let Some(&max) = sizes.last() {
        if max > pool.len() {
            return Err(Error::invalid(format!(
                "sweep size {max} exceeds the {} available training questions",
                pool.len()
            )));
        }
    }
    let mut shuffled: Vec<Question> = pool.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);

    let mut rows = Vec::new();
    for &size in &sizes {
        for &method in methods {
            let mut config = base_config.clone();
            config.columns = match method {
                QedMethod::Crf => crate::crf::FeatureColumns::plain(),
                QedMethod::Ensemble => crate::crf::FeatureColumns::ensemble(),
            };
            let model = train_qed_model(&shuffled[..size], store, df, &config)?;
            let report = evaluate_crf_model(&model, heldout, store, df)?;
            rows.push(SweepRow {
                size,
                method,
                precision: report.precision,
                recall: report.recall,
                f1: report.f1,
            });
        }
    }
    Ok(SweepReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn perfect_predictions_score_one() {
        let spans = vec![(vec![(0, 2), (3, 6)], vec![(0, 2), (3, 6)]), (vec![(1, 2)], vec![(1, 2)])];
        let r = qed_metrics(&spans);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn f1_arithmetic_on_reference_rows() {
        // Published precision/recall/F1 triples must be self-consistent
        // under our harmonic mean (printed values carry 4 digits).
        let rows = [
            (0.2863, 0.7260, 0.4106),
            (0.4466, 0.4328, 0.4396),
            (0.4695, 0.5011, 0.4848),
            (0.4646, 0.5384, 0.4988),
            (0.4742, 0.5394, 0.5047),
            (0.4788, 0.5426, 0.5087),
            (0.5590, 0.6716, 0.6102),
            (0.5536, 0.7708, 0.6444),
            (0.3896, 0.5405, 0.4528),
        ];
        for (p, r, f1) in rows {
            assert!(
                (f1_score(p, r) - f1).abs() <= 1e-4,
                "P={p} R={r}: {} vs {f1}",
                f1_score(p, r)
            );
        }
    }

    #[test]
    fn empty_inputs_follow_zero_division_rule() {
        let r = qed_metrics(&[]);
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        let r = qed_metrics(&[(vec![], vec![(0, 1)])]);
        assert_eq!(r.precision, 0.0);
        assert_eq!(r.recall, 0.0);
        assert_eq!(el_accuracy(&[]), 0.0);
    }

    /// Reference matcher: maximum bipartite matching by brute force over
    /// subsets (exact-match edges only), on tiny inputs.
    fn brute_force_correct(pred: &[(usize, usize)], gold: &[(usize, usize)]) -> usize {
        fn recurse(pred: &[(usize, usize)], used: &mut Vec<bool>, gold: &[(usize, usize)]) -> usize {
            match pred.split_first() {
                None => 0,
                Some((p, rest)) => {
                    let mut best = recurse(rest, used, gold);
                    for (gi, g) in gold.iter().enumerate() {
                        if !used[gi] && g == p {
                            used[gi] = true;
                            best = best.max(1 + recurse(rest, used, gold));
                            used[gi] = false;
                        }
                    }
                    best
                }
            }
        }
        recurse(pred, &mut vec![false; gold.len()], gold)
    }

    #[test]
    fn matching_agrees_with_brute_force_on_random_fixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let mk = |rng: &mut ChaCha8Rng| {
                let n = rng.gen_range(0..5);
                (0..n)
                    .map(|_| {
                        let s = rng.gen_range(0..4);
                        (s, s + rng.gen_range(1..3))
                    })
                    .collect::<Vec<_>>()
            };
            let pred = mk(&mut rng);
            let gold = mk(&mut rng);
            let report = qed_metrics(&[(pred.clone(), gold.clone())]);
            assert_eq!(report.correct, brute_force_correct(&pred, &gold));
        }
    }

    #[test]
    fn el_accuracy_counts_missing_candidates_as_wrong() {
        let items = vec![
            (Some("E1".to_string()), "E1".to_string()),
            (None, "E2".to_string()),
            (Some("E9".to_string()), "E3".to_string()),
            (Some("E4".to_string()), "E4".to_string()),
        ];
        assert_eq!(el_accuracy(&items), 0.5);
    }

    #[test]
    fn thirteen_of_twenty_fixture() {
        let items: Vec<(Option<String>, String)> = (0..20)
            .map(|i| {
                let gold = format!("E{i}");
                let top1 = if i < 13 { Some(format!("E{i}")) } else { Some("WRONG".into()) };
                (top1, gold)
            })
            .collect();
        assert!((el_accuracy(&items) - 0.65).abs() < 1e-12);
    }

    #[test]
    fn overall_requires_span_and_id() {
        // Perfect spans, always-wrong links: overall is zero.
        let per_q = vec![(
            vec![((0, 2), Some("BAD".to_string())), ((3, 6), Some("BAD".to_string()))],
            vec![((0, 2), "E1".to_string()), ((3, 6), "E2".to_string())],
        )];
        let r = overall_metrics(&per_q);
        assert_eq!((r.precision, r.recall), (0.0, 0.0));

        let perfect = vec![(
            vec![((0, 2), Some("E1".to_string()))],
            vec![((0, 2), "E1".to_string())],
        )];
        let r = overall_metrics(&perfect);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    proptest! {
        #[test]
        fn f1_between_min_and_max(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
            let f = f1_score(p, r);
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!(f <= p.max(r) + 1e-12);
            prop_assert!(f + 1e-12 >= p.min(r));
        }

        #[test]
        fn metrics_invariant_under_permutation(
            qs in proptest::collection::vec(
                (proptest::collection::vec((0usize..6, 1usize..3), 0..4),
                 proptest::collection::vec((0usize..6, 1usize..3), 0..4)),
                0..5),
            shuffle_seed in any::<u64>(),
        ) {
            let items: Vec<(Vec<Span>, Vec<Span>)> = qs
                .into_iter()
                .map(|(p, g)| {
                    (p.into_iter().map(|(s, l)| (s, s + l)).collect(),
                     g.into_iter().map(|(s, l)| (s, s + l)).collect())
                })
                .collect();
            let base = qed_metrics(&items);

            let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
            let mut shuffled = items.clone();
            shuffled.shuffle(&mut rng);
            // Also shuffle mention order inside each question.
            for (p, g) in shuffled.iter_mut() {
                p.shuffle(&mut rng);
                g.shuffle(&mut rng);
            }
            prop_assert_eq!(qed_metrics(&shuffled), base);
        }
    }
}
