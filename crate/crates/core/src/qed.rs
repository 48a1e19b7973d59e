//! Mention discovery strategies: pure KG retrieval, CRF decoding (plain or
//! with the KG feature column), and the lexicon-checked union of the two.

use serde::{Deserialize, Serialize};

use crate::crf::{bioes_decode, extract_features, CrfModel};
use crate::error::Result;
use crate::kg_store::KgStore;
use crate::segmentation::{generate_candidates, segment_fmm, CandidateConfig};
use crate::similarity::IdfTable;
use crate::text::char_slice;

/// Which strategy produced a mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MentionSource {
    KgRetrieval,
    Crf,
    LexiconIteration,
}

/// A discovered mention span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub source: MentionSource,
}

impl Mention {
    pub fn span(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    fn overlaps(&self, other: &Mention) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// One line of the discovery output JSONL.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscoveryRecord {
    pub id: String,
    pub mentions: Vec<Mention>,
}

/// Candidate spans that match the KG, kept as-is (overlaps included).
pub fn discover_kg(text: &str, store: &KgStore, config: &CandidateConfig) -> Vec<Mention> {
    let tokens = segment_fmm(text, store);
    generate_candidates(text, &tokens, store, config)
        .into_iter()
        .map(|c| Mention {
            start: c.start,
            end: c.end,
            surface: c.surface,
            source: MentionSource::KgRetrieval,
        })
        .collect()
}

/// Viterbi-decode a question with a trained model. When the model was
/// trained with the KG column this is the ensemble method; KG retrieval
/// runs internally to supply the tags.
pub fn discover_crf(
    text: &str,
    model: &CrfModel,
    store: &KgStore,
    df_table: &IdfTable,
) -> Result<Vec<Mention>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let tokens = segment_fmm(text, store);
    let kg_spans = if model.columns.kg_tag {
        let config = CandidateConfig {
            max_n: model.max_n,
            ..CandidateConfig::default()
        };
        generate_candidates(text, &tokens, store, &config)
    } else {
        Vec::new()
    };
    let observations = extract_features(
        text,
        &tokens,
        &kg_spans,
        df_table.counts(),
        store.stopwords(),
        model.df_buckets,
    );
    let labels = model.viterbi(&observations)?;
    Ok(bioes_decode(&labels)
        .into_iter()
        .map(|(start, end)| Mention {
            start,
            end,
            surface: char_slice(text, start, end).unwrap_or_default().to_string(),
            source: MentionSource::Crf,
        })
        .collect())
}

/// Union the CRF output with those KG-retrieval mentions that overlap no
/// CRF mention and whose surface is in the lexicon. CRF mentions are never
/// removed; additions carry [`MentionSource::LexiconIteration`]. The
/// result is sorted by (start, end) and deduplicated on identical spans,
/// keeping the earliest source in pipeline order.
pub fn one_step_iteration(
    crf_mentions: &[Mention],
    kg_mentions: &[Mention],
    store: &KgStore,
) -> Vec<Mention> {
    let mut result: Vec<Mention> = crf_mentions.to_vec();
    for kg in kg_mentions {
        let ignored_by_crf = crf_mentions.iter().all(|m| !m.overlaps(kg));
        if ignored_by_crf && store.in_lexicon(&kg.surface) {
            result.push(Mention {
                source: MentionSource::LexiconIteration,
                ..kg.clone()
            });
        }
    }
    dedup_mentions(&mut result);
    result
}

/// Sort by (start, end) and keep one mention per span, preferring the
/// source that comes first in the pipeline (KG retrieval, CRF, lexicon
/// iteration).
pub fn dedup_mentions(mentions: &mut Vec<Mention>) {
    mentions.sort_by_key(|m| (m.start, m.end, m.source));
    mentions.dedup_by_key(|m| (m.start, m.end));
}
