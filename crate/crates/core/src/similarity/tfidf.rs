//! From-scratch TF-IDF vectorizer: raw term count × smoothed IDF,
//! L2-normalized, compared by cosine. Out-of-vocabulary terms are
//! ignored.

use serde::{Deserialize, Serialize};

use crate::text::normalize;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TfidfModel {
    /// Sorted vocabulary; the index of a term is its vector dimension.
    vocab: Vec<String>,
    idf: Vec<f64>,
    n_docs: u32,
}

/// Sparse vector as sorted (dimension, weight) pairs.
pub type SparseVec = Vec<(usize, f64)>;

impl TfidfModel {
    /// Fit vocabulary and IDF over tokenized documents.
    pub fn fit(docs: &[Vec<String>]) -> Self {
        let mut df: std::collections::BTreeMap<String, u32> = std::collections::BTreeMap::new();
        for doc in docs {
            let terms: std::collections::BTreeSet<String> =
                doc.iter().map(|t| normalize(t)).filter(|t| !t.is_empty()).collect();
            for term in terms {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let n_docs = docs.len() as u32;
        let (vocab, idf): (Vec<String>, Vec<f64>) = df
            .into_iter()
            .map(|(term, d)| {
                let idf = ((n_docs as f64 + 1.0) / (d as f64 + 1.0)).ln();
                (term, idf)
            })
            .unzip();
        TfidfModel { vocab, idf, n_docs }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn term_index(&self, term: &str) -> Option<usize> {
        self.vocab.binary_search_by(|v| v.as_str().cmp(term)).ok()
    }

    /// L2-normalized tf·idf vector of a tokenized text.
    pub fn vector(&self, terms: &[String]) -> SparseVec {
        let mut counts: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for term in terms {
            if let Some(i) = self.term_index(&normalize(term)) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut vec: SparseVec = counts
            .into_iter()
            .map(|(i, tf)| (i, tf * self.idf[i]))
            .collect();
        let norm: f64 = vec.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in vec.iter_mut() {
                *w /= norm;
            }
        }
        vec
    }

    /// Cosine of the two TF-IDF vectors; 0 when either is empty or all
    /// out of vocabulary.
    pub fn similarity(&self, a_terms: &[String], b_terms: &[String]) -> f64 {
        sparse_cosine(&self.vector(a_terms), &self.vector(b_terms))
    }
}

pub(crate) fn sparse_cosine(a: &SparseVec, b: &SparseVec) -> f64 {
    let mut dot = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    let na: f64 = a.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
