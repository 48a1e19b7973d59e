//! Topic model trained by collapsed Gibbs sampling. New texts are folded
//! in against the frozen word–topic counts and compared by the cosine of
//! their topic proportions. Stopwords are removed before training and
//! inference; every sampling pass is driven by a ChaCha stream seeded
//! from the model seed, so results are reproducible.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::normalize;

#[derive(Debug, Clone)]
pub struct LdaConfig {
    pub topics: usize,
    /// Document–topic prior; `None` means 50/K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub train_sweeps: usize,
    pub infer_sweeps: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            topics: 50,
            alpha: None,
            beta: 0.01,
            train_sweeps: 500,
            infer_sweeps: 50,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaModel {
    topics: usize,
    alpha: f64,
    beta: f64,
    infer_sweeps: usize,
    seed: u64,
    vocab: Vec<String>,
    #[serde(skip)]
    vocab_index: HashMap<String, usize>,
    /// word_topic[w][k], frozen after training.
    word_topic: Vec<Vec<u32>>,
    topic_totals: Vec<u32>,
    stopwords: Vec<String>,
    #[serde(skip)]
    stopword_set: HashSet<String>,
}

impl LdaModel {
    /// Train by collapsed Gibbs sampling over the tokenized documents.
    pub fn fit(docs: &[Vec<String>], stopwords: &HashSet<String>, config: &LdaConfig) -> Result<Self> {
        if config.topics == 0 {
            return Err(Error::invalid("LDA needs at least one topic"));
        }
        let k = config.topics;
        let alpha = config.alpha.unwrap_or(50.0 / k as f64);
        let beta = config.beta;
        if alpha <= 0.0 || beta <= 0.0 {
            return Err(Error::invalid("LDA priors must be positive"));
        }

        // Filter stopwords and build the vocabulary in first-seen order,
        // then sort for stable serialization.
        let filtered: Vec<Vec<String>> = docs
            .iter()
            .map(|doc| {
                doc.iter()
                    .map(|t| normalize(t))
                    .filter(|t| !t.is_empty() && !stopwords.contains(t))
                    .collect()
            })
            .collect();
        let mut vocab: Vec<String> = filtered
            .iter()
            .flatten()
            .cloned()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        vocab.sort();
        if vocab.is_empty() {
            return Err(Error::invalid(
                "LDA corpus is empty after stopword removal",
            ));
        }
        let vocab_index: HashMap<String, usize> =
            vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let v = vocab.len();

        // Token stream as (doc, word) pairs.
        let mut tokens: Vec<(usize, usize)> = Vec::new();
        for (d, doc) in filtered.iter().enumerate() {
            for w in doc {
                tokens.push((d, vocab_index[w]));
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut z: Vec<usize> = tokens.iter().map(|_| rng.gen_range(0..k)).collect();
        let mut word_topic = vec![vec![0u32; k]; v];
        let mut doc_topic = vec![vec![0u32; k]; docs.len()];
        let mut topic_totals = vec![0u32; k];
        for (n, &(d, w)) in tokens.iter().enumerate() {
            word_topic[w][z[n]] += 1;
            doc_topic[d][z[n]] += 1;
            topic_totals[z[n]] += 1;
        }

        let v_beta = v as f64 * beta;
        let mut weights = vec![0.0f64; k];
        for _ in 0..config.train_sweeps {
            for (n, &(d, w)) in tokens.iter().enumerate() {
                let old = z[n];
                word_topic[w][old] -= 1;
                doc_topic[d][old] -= 1;
                topic_totals[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (doc_topic[d][t] as f64 + alpha)
                        * (word_topic[w][t] as f64 + beta)
                        / (topic_totals[t] as f64 + v_beta);
                    total += p;
                    weights[t] = total;
                }
                let draw = rng.gen_range(0.0..total);
                let new = weights.iter().position(|&c| draw < c).unwrap_or(k - 1);

                z[n] = new;
                word_topic[w][new] += 1;
                doc_topic[d][new] += 1;
                topic_totals[new] += 1;
            }
        }

        let mut stop_sorted: Vec<String> = stopwords.iter().cloned().collect();
        stop_sorted.sort();
        Ok(LdaModel {
            topics: k,
            alpha,
            beta,
            infer_sweeps: config.infer_sweeps,
            seed: config.seed,
            vocab,
            vocab_index,
            word_topic,
            topic_totals,
            stopwords: stop_sorted,
            stopword_set: stopwords.clone(),
        })
    }

    /// Rebuild the derived lookup tables after deserialization.
    pub(crate) fn rebuild_indexes(&mut self) {
        self.vocab_index = self
            .vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        self.stopword_set = self.stopwords.iter().cloned().collect();
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    /// Topic proportions of a tokenized text: fold-in Gibbs against the
    /// frozen counts, then `(n_k + α) / (n + Kα)`. Sums to 1. Texts with
    /// no known terms get the uniform prior.
    pub fn infer(&self, terms: &[String]) -> Vec<f64> {
        let words: Vec<usize> = terms
            .iter()
            .map(|t| normalize(t))
            .filter(|t| !t.is_empty() && !self.stopword_set.contains(t))
            .filter_map(|t| self.vocab_index.get(&t).copied())
            .collect();
        let k = self.topics;
        let v_beta = self.vocab.len() as f64 * self.beta;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);

        let mut z = vec![0usize; words.len()];
        let mut doc_topic = vec![0u32; k];
        for (n, _) in words.iter().enumerate() {
            let t = rng.gen_range(0..k);
            z[n] = t;
            doc_topic[t] += 1;
        }
        let mut weights = vec![0.0f64; k];
        for _ in 0..self.infer_sweeps {
            for (n, &w) in words.iter().enumerate() {
                let old = z[n];
                doc_topic[old] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    let p = (doc_topic[t] as f64 + self.alpha)
                        * (self.word_topic[w][t] as f64 + self.beta)
                        / (self.topic_totals[t] as f64 + v_beta);
                    total += p;
                    weights[t] = total;
                }
                let draw = rng.gen_range(0.0..total);
                let new = weights.iter().position(|&c| draw < c).unwrap_or(k - 1);
                z[n] = new;
                doc_topic[new] += 1;
            }
        }

        let denom = words.len() as f64 + k as f64 * self.alpha;
        doc_topic
            .iter()
            .map(|&c| (c as f64 + self.alpha) / denom)
            .collect()
    }

    /// Cosine of the inferred topic proportions.
    pub fn similarity(&self, a_terms: &[String], b_terms: &[String]) -> f64 {
        let pa = self.infer(a_terms);
        let pb = self.infer(b_terms);
        let dot: f64 = pa.iter().zip(&pb).map(|(x, y)| x * y).sum();
        let na: f64 = pa.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = pb.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }
}
