//! Forward-maximum-matching tokenization against the POS lexicon and the
//! filtered n-gram candidate spans fed to KG retrieval.

use crate::kg_store::KgStore;
use crate::text::normalize;

/// A segmentation token. Offsets are in Unicode scalar values, end
/// exclusive; the tokens of one segmentation tile the text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    /// POS tag from the lexicon, or `"UNK"` for single characters that
    /// start no lexicon entry.
    pub pos: String,
}

/// A token n-gram that survived the candidate filters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    /// First and last token index, inclusive.
    pub first_token: usize,
    pub last_token: usize,
}

/// Filter settings for [`generate_candidates`].
#[derive(Debug, Clone)]
pub struct CandidateConfig {
    /// Longest n-gram, in tokens.
    pub max_n: usize,
    /// A token counts as content when its POS starts with one of these
    /// prefixes.
    pub content_pos_prefixes: Vec<String>,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig {
            max_n: 4,
            content_pos_prefixes: vec!["n".into(), "v".into()],
        }
    }
}

/// Greedy left-to-right longest lexicon match. The window is the longest
/// lexicon entry; characters that start no entry become single-character
/// `UNK` tokens. Concatenating the token surfaces reproduces the input.
pub fn segment_fmm(text: &str, store: &KgStore) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let max_window = store.lexicon_max_chars().max(1);
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let mut matched = 0;
        let mut pos = None;
        // Normalization trims surrounding whitespace, so a window that
        // starts or ends on whitespace would match a shorter entry and
        // silently swallow the space; never attempt those.
        let upper = if chars[i].is_whitespace() {
            0
        } else {
            max_window.min(chars.len() - i)
        };
        for len in (1..=upper).rev() {
            if chars[i + len - 1].is_whitespace() {
                continue;
            }
            let slice: String = chars[i..i + len].iter().collect();
            let key = normalize(&slice);
            if store.lexicon_contains_key(&key) {
                matched = len;
                pos = store.lexicon_pos(&key).map(str::to_string);
                break;
            }
        }
        let len = matched.max(1);
        tokens.push(Token {
            surface: chars[i..i + len].iter().collect(),
            start: i,
            end: i + len,
            pos: if matched > 0 {
                pos.unwrap_or_else(|| "UNK".into())
            } else {
                "UNK".into()
            },
        });
        i += len;
    }
    tokens
}

/// All token n-grams with n ≤ `max_n`, filtered in order: grams whose
/// boundary token is pure separator material are dropped (the span would
/// not correspond to its normalized surface), single-character 1-grams
/// are dropped, n-grams with no content-POS token and no digit character
/// are dropped, and only spans whose normalized surface matches at least
/// one KG entry survive. Output is ordered by (start, end).
pub fn generate_candidates(
    text: &str,
    tokens: &[Token],
    store: &KgStore,
    config: &CandidateConfig,
) -> Vec<CandidateSpan> {
    let chars: Vec<char> = text.chars().collect();
    let separator: Vec<bool> = tokens
        .iter()
        .map(|t| {
            let n = normalize(&t.surface);
            n.is_empty() || n == "_"
        })
        .collect();
    let mut out = Vec::new();
    for first in 0..tokens.len() {
        for n in 1..=config.max_n {
            let last = first + n - 1;
            if last >= tokens.len() {
                break;
            }
            if separator[first] || separator[last] {
                continue;
            }
            let start = tokens[first].start;
            let end = tokens[last].end;
            let surface: String = chars[start..end].iter().collect();

            if n == 1 && end - start == 1 {
                continue;
            }
            let has_content = tokens[first..=last].iter().any(|t| {
                config
                    .content_pos_prefixes
                    .iter()
                    .any(|p| t.pos.starts_with(p.as_str()))
            });
            let has_digit = surface.chars().any(|c| c.is_numeric());
            if !has_content && !has_digit {
                continue;
            }
            if store.lookup_normalized(&normalize(&surface)).is_empty() {
                continue;
            }
            out.push(CandidateSpan {
                start,
                end,
                surface,
                first_token: first,
                last_token: last,
            });
        }
    }
    out.sort_by_key(|c| (c.start, c.end));
    out
}
