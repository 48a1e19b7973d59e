//! Latent semantic indexing: rank-k SVD of the TF-IDF term–document
//! matrix. Texts are compared by the cosine of their projections onto the
//! top-k left singular vectors, so at full rank the similarity of any two
//! in-span vectors equals their TF-IDF cosine.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::tfidf::{SparseVec, TfidfModel};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LsiModel {
    /// Rows of Uᵀ, k × vocab.
    projection: Vec<Vec<f64>>,
    singular_values: Vec<f64>,
}

impl LsiModel {
    /// Decompose the term–document matrix built from `docs` under the
    /// fitted vectorizer. `rank` is capped at the numerical rank.
    pub fn fit(tfidf: &TfidfModel, docs: &[Vec<String>], rank: usize) -> Result<Self> {
        let v = tfidf.vocab_size();
        let d = docs.len();
        if v == 0 || d == 0 {
            return Err(Error::invalid("cannot fit LSI on an empty corpus"));
        }
        if rank == 0 {
            return Err(Error::invalid("LSI rank must be at least 1"));
        }
        let mut x = DMatrix::<f64>::zeros(v, d);
        for (j, doc) in docs.iter().enumerate() {
            for (i, w) in tfidf.vector(doc) {
                x[(i, j)] = w;
            }
        }
        let svd = x.svd(true, false);
        let u = svd.u.expect("svd was asked for u");
        let sigma = svd.singular_values;

        let tol = (v.max(d) as f64) * f64::EPSILON * sigma.iter().cloned().fold(0.0, f64::max);
        let numerical_rank = sigma.iter().filter(|&&s| s > tol).count().max(1);
        let k = rank.min(numerical_rank);

        let projection: Vec<Vec<f64>> = (0..k).map(|r| u.column(r).iter().cloned().collect()).collect();
        let singular_values: Vec<f64> = sigma.iter().take(k).cloned().collect();
        Ok(LsiModel {
            projection,
            singular_values,
        })
    }

    pub fn rank(&self) -> usize {
        self.projection.len()
    }

    /// Non-negative, non-increasing.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Project a TF-IDF vector into the latent space: `Uₖᵀ x`.
    pub fn project(&self, x: &SparseVec) -> Vec<f64> {
        self.projection
            .iter()
            .map(|row| x.iter().map(|&(i, w)| row[i] * w).sum())
            .collect()
    }

    /// Cosine of the rank-k projections of the two texts' TF-IDF vectors.
    pub fn similarity(&self, tfidf: &TfidfModel, a_terms: &[String], b_terms: &[String]) -> f64 {
        let pa = self.project(&tfidf.vector(a_terms));
        let pb = self.project(&tfidf.vector(b_terms));
        dense_cosine(&pa, &pb)
    }
}

fn dense_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&str]) -> Vec<Vec<String>> {
        raw.iter()
            .map(|d| d.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    fn terms(raw: &str) -> Vec<String> {
        raw.split_whitespace().map(str::to_string).collect()
    }

    fn toy() -> (TfidfModel, Vec<Vec<String>>) {
        let corpus = docs(&[
            "apple banana cherry",
            "apple banana",
            "date elder",
            "cherry date elder fig",
            "banana fig",
        ]);
        (TfidfModel::fit(&corpus), corpus)
    }

    #[test]
    fn identical_texts_score_one() {
        let (tfidf, corpus) = toy();
        let lsi = LsiModel::fit(&tfidf, &corpus, 3).unwrap();
        let t = terms("apple banana");
        assert!((lsi.similarity(&tfidf, &t, &t) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn singular_values_are_sorted_nonnegative() {
        let (tfidf, corpus) = toy();
        let lsi = LsiModel::fit(&tfidf, &corpus, 5).unwrap();
        let sv = lsi.singular_values();
        assert!(!sv.is_empty());
        assert!(sv.iter().all(|&s| s >= 0.0));
        assert!(sv.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn full_rank_projection_preserves_corpus_cosines() {
        let (tfidf, corpus) = toy();
        let lsi = LsiModel::fit(&tfidf, &corpus, 100).unwrap();
        for a in &corpus {
            for b in &corpus {
                let flat = tfidf.similarity(a, b);
                let latent = lsi.similarity(&tfidf, a, b);
                assert!(
                    (flat - latent).abs() <= 1e-6,
                    "tfidf {flat} vs lsi {latent} for {a:?} / {b:?}"
                );
            }
        }
    }

    /// One-sided Jacobi SVD over column pairs; an implementation-independent
    /// route to the singular values of a small dense matrix.
    #[allow(clippy::needless_range_loop)]
    fn jacobi_singular_values(rows: usize, cols: usize, data: &[f64]) -> Vec<f64> {
        let mut a: Vec<Vec<f64>> = (0..cols)
            .map(|j| (0..rows).map(|i| data[i * cols + j]).collect())
            .collect();
        for _ in 0..60 {
            let mut off = 0.0f64;
            for p in 0..cols {
                for q in (p + 1)..cols {
                    let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                    let beta: f64 = a[q].iter().map(|x| x * x).sum();
                    let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                    off = off.max(gamma.abs());
                    if gamma.abs() < 1e-15 {
                        continue;
                    }
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for i in 0..rows {
                        let (x, y) = (a[p][i], a[q][i]);
                        a[p][i] = c * x - s * y;
                        a[q][i] = s * x + c * y;
                    }
                }
            }
            if off < 1e-14 {
                break;
            }
        }
        let mut sv: Vec<f64> = a
            .iter()
            .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
        sv
    }

    #[test]
    fn singular_values_match_jacobi_oracle() {
        // A 10×8 term-document matrix realized through the normal fit
        // path: 8 docs over a 10-term vocabulary.
        let corpus = docs(&[
            "t0 t1 t2",
            "t1 t2 t3 t3",
            "t4 t5",
            "t5 t6 t7",
            "t0 t7 t8",
            "t8 t9 t9 t1",
            "t2 t4 t6",
            "t3 t9",
        ]);
        let tfidf = TfidfModel::fit(&corpus);
        assert_eq!(tfidf.vocab_size(), 10);
        let lsi = LsiModel::fit(&tfidf, &corpus, 8).unwrap();

        let mut dense = vec![0.0; 10 * 8];
        for (j, doc) in corpus.iter().enumerate() {
            for (i, w) in tfidf.vector(doc) {
                dense[i * 8 + j] = w;
            }
        }
        let oracle = jacobi_singular_values(10, 8, &dense);
        let got = lsi.singular_values();
        assert!(!got.is_empty() && got.len() <= 8);
        for (g, o) in got.iter().zip(&oracle) {
            assert!((g - o).abs() <= 1e-8, "sigma {g} vs oracle {o}");
        }
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let tfidf = TfidfModel::fit(&[]);
        assert!(LsiModel::fit(&tfidf, &[], 2).is_err());
    }
}
