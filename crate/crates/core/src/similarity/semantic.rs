//! Saliency-weighted semantic similarity: an IDF-weighted, BM25-shaped
//! aggregation of per-term maximum embedding cosines.
//!
//! With an exact-match indicator in place of the cosine this reduces to
//! BM25 with binary term frequency, which the tests assert.

use crate::error::{Error, Result};
use crate::similarity::embedding::{cosine, EmbeddingTable};
use crate::similarity::idf::IdfTable;

/// BM25-style smoothing parameters.
#[derive(Debug, Clone, Copy)]
pub struct SemanticParams {
    pub k1: f64,
    pub b: f64,
}

impl Default for SemanticParams {
    fn default() -> Self {
        SemanticParams { k1: 1.5, b: 0.75 }
    }
}

/// Best embedding cosine of `w` against the entity terms, clamped to
/// [0, 1] so the saturation denominator stays positive. A query term
/// with no vector scores 1 when it appears verbatim among the entity
/// terms and 0 otherwise.
fn sem(term: &str, e_terms: &[String], emb: &EmbeddingTable) -> f64 {
    match emb.get(term) {
        Some(vw) => {
            let best = e_terms
                .iter()
                .filter_map(|w| emb.get(w))
                .map(|ve| cosine(vw, ve).unwrap_or(0.0))
                .fold(0.0f64, f64::max);
            best.clamp(0.0, 1.0)
        }
        None => {
            if e_terms.iter().any(|w| w == term) {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// `Σ_{w∈q} IDF(w) · sem(w,e)(k1+1) / (sem(w,e) + k1(1 − b + b·|e|/avge))`
/// where `|e|` is the entity term count and `avge` the average over the
/// candidate set. Repeated query terms contribute once per occurrence.
pub fn semantic_similarity(
    q_terms: &[String],
    e_terms: &[String],
    emb: &EmbeddingTable,
    idf: &IdfTable,
    params: SemanticParams,
    avge: f64,
) -> Result<f64> {
    let weighted: Vec<(String, f64)> =
        q_terms.iter().map(|w| (w.clone(), idf.idf(w))).collect();
    semantic_similarity_weighted(&weighted, e_terms, emb, params, avge)
}

/// Same aggregation with caller-supplied per-term saliency weights in
/// place of the table-derived IDF.
pub fn semantic_similarity_weighted(
    q_weighted: &[(String, f64)],
    e_terms: &[String],
    emb: &EmbeddingTable,
    params: SemanticParams,
    avge: f64,
) -> Result<f64> {
    if avge <= 0.0 {
        return Err(Error::invalid(format!(
            "avge must be positive, got {avge}"
        )));
    }
    if e_terms.is_empty() {
        return Err(Error::invalid("entity term set is empty"));
    }
    if params.k1 < 0.0 || !(0.0..=1.0).contains(&params.b) {
        return Err(Error::invalid(format!(
            "invalid smoothing parameters k1={} b={}",
            params.k1, params.b
        )));
    }
    let len_norm = 1.0 - params.b + params.b * e_terms.len() as f64 / avge;
    let mut total = 0.0;
    for (w, weight) in q_weighted {
        let s = sem(w, e_terms, emb);
        if s > 0.0 {
            total += weight * s * (params.k1 + 1.0) / (s + params.k1 * len_norm);
        }
    }
    Ok(total)
}
