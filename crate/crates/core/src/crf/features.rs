//! Per-character observations and the frozen feature templates.
//!
//! Columns: character n-grams (N = 1..4 anchored inside a ±3 window),
//! word boundary, POS of the containing token, stopword flag, quantized
//! document frequency, and the BIOES tag produced by KG retrieval when
//! the ensemble column is enabled. Adding or removing one column never
//! changes the strings another column emits.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::crf::bioes::{bioes_encode, Label};
use crate::segmentation::{CandidateSpan, Token};
use crate::text::normalize;

/// Position of a character inside its token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordBoundary {
    B,
    I,
    E,
    S,
}

impl WordBoundary {
    fn as_str(self) -> &'static str {
        match self {
            WordBoundary::B => "B",
            WordBoundary::I => "I",
            WordBoundary::E => "E",
            WordBoundary::S => "S",
        }
    }
}

/// Everything the CRF sees about one character position.
#[derive(Debug, Clone)]
pub struct CharObservation {
    pub ch: char,
    /// In-bounds character grams as (start offset relative to the
    /// position, gram length, gram), in frozen template order.
    pub char_ngrams: Vec<(i8, u8, String)>,
    pub word_boundary: WordBoundary,
    pub pos: String,
    pub is_stopword: bool,
    pub df_bucket: u32,
    /// BIOES tag from KG retrieval, `O` outside retrieved spans.
    pub kg_tag: Label,
}

/// Which feature columns a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumns {
    pub chars: bool,
    pub word_boundary: bool,
    pub pos: bool,
    pub stopword: bool,
    pub df: bool,
    pub kg_tag: bool,
}

impl FeatureColumns {
    /// Every column except the KG tag.
    pub fn plain() -> Self {
        FeatureColumns {
            chars: true,
            word_boundary: true,
            pos: true,
            stopword: true,
            df: true,
            kg_tag: false,
        }
    }

    /// Every column including the KG tag (the ensemble method).
    pub fn ensemble() -> Self {
        FeatureColumns {
            kg_tag: true,
            ..FeatureColumns::plain()
        }
    }
}

/// (start offset, length) of every character-gram template, frozen: all
/// grams of total length 1..=4 that cover the current position within a
/// ±3 window.
pub const CHAR_TEMPLATES: [(i8, u8); 10] = [
    (0, 1),
    (-1, 2),
    (0, 2),
    (-2, 3),
    (-1, 3),
    (0, 3),
    (-3, 4),
    (-2, 4),
    (-1, 4),
    (0, 4),
];

/// Resolve overlapping retrieval spans: longer spans win, then earlier
/// starts. The survivors are non-overlapping.
fn resolve_kg_spans(kg_spans: &[CandidateSpan]) -> Vec<(usize, usize)> {
    let mut order: Vec<(usize, usize)> = kg_spans.iter().map(|c| (c.start, c.end)).collect();
    order.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)));
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for (s, e) in order {
        if kept.iter().all(|&(ks, ke)| e <= ks || s >= ke) {
            kept.push((s, e));
        }
    }
    kept.sort_unstable();
    kept
}

/// Build one observation per character of `text`.
///
/// `df_table` maps normalized terms to document frequencies; `stopwords`
/// holds normalized terms. `df_buckets` quantizes the DF column as
/// `min(buckets - 1, floor(log2(df + 1)))`.
pub fn extract_features(
    text: &str,
    tokens: &[Token],
    kg_spans: &[CandidateSpan],
    df_table: &HashMap<String, u32>,
    stopwords: &HashSet<String>,
    df_buckets: u32,
) -> Vec<CharObservation> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();

    // Per-character token index; tokens from segment_fmm tile the text.
    let mut char_token = vec![usize::MAX; n];
    for (ti, t) in tokens.iter().enumerate() {
        for slot in char_token.iter_mut().take(t.end.min(n)).skip(t.start) {
            *slot = ti;
        }
    }

    let kg_labels = bioes_encode(n, &resolve_kg_spans(kg_spans))
        .expect("resolved KG spans are non-overlapping and in bounds");

    let buckets = df_buckets.max(1);
    (0..n)
        .map(|i| {
            let mut char_ngrams = Vec::with_capacity(CHAR_TEMPLATES.len());
            for &(off, len) in &CHAR_TEMPLATES {
                let start = i as i64 + off as i64;
                let end = start + len as i64;
                if start >= 0 && end <= n as i64 {
                    let gram: String = chars[start as usize..end as usize].iter().collect();
                    char_ngrams.push((off, len, gram));
                }
            }

            let (word_boundary, pos, is_stopword, df_bucket) = match char_token[i] {
                usize::MAX => (WordBoundary::S, "UNK".to_string(), false, 0),
                ti => {
                    let t = &tokens[ti];
                    let wb = if t.end - t.start == 1 {
                        WordBoundary::S
                    } else if i == t.start {
                        WordBoundary::B
                    } else if i == t.end - 1 {
                        WordBoundary::E
                    } else {
                        WordBoundary::I
                    };
                    let key = normalize(&t.surface);
                    let df = df_table.get(&key).copied().unwrap_or(0);
                    let bucket = ((df as u64 + 1).ilog2()).min(buckets - 1);
                    (wb, t.pos.clone(), stopwords.contains(&key), bucket)
                }
            };

            CharObservation {
                ch: chars[i],
                char_ngrams,
                word_boundary,
                pos,
                is_stopword,
                df_bucket,
                kg_tag: kg_labels[i],
            }
        })
        .collect()
}

/// Active feature strings for one observation under the enabled columns,
/// in frozen template order.
pub fn features_at(obs: &CharObservation, columns: &FeatureColumns) -> Vec<String> {
    let mut out = Vec::new();
    if columns.chars {
        for (off, len, gram) in &obs.char_ngrams {
            out.push(format!("G{len}[{off}]={gram}"));
        }
    }
    if columns.word_boundary {
        out.push(format!("WB={}", obs.word_boundary.as_str()));
    }
    if columns.pos {
        out.push(format!("POS={}", obs.pos));
    }
    if columns.stopword {
        out.push(format!("SW={}", u8::from(obs.is_stopword)));
    }
    if columns.df {
        out.push(format!("DF={}", obs.df_bucket));
    }
    if columns.kg_tag {
        out.push(format!("KG={}", obs.kg_tag.as_str()));
    }
    out
}
