//! The trained CRF model: scoring, the forward recursion for the log
//! partition function, Viterbi decoding, and versioned JSON
//! serialization.

// Fixed five-label tables are indexed directly throughout the
// recursions; iterator rewrites obscure the math.
#![allow(clippy::needless_range_loop)]

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crf::bioes::{Label, LABELS, NUM_LABELS};
use crate::crf::features::{features_at, CharObservation, FeatureColumns};
use crate::error::{Error, Result};

const MODEL_VERSION: u32 = 1;

/// Linear-chain CRF over the five BIOES labels.
///
/// Unary weights live in `weights[feature_id * 5 + label]`; transitions in
/// a dense 5×5 table. Features unseen at training time score 0.
#[derive(Debug, Clone)]
pub struct CrfModel {
    pub columns: FeatureColumns,
    pub feature_ids: HashMap<String, u32>,
    pub weights: Vec<f64>,
    pub transitions: [[f64; NUM_LABELS]; NUM_LABELS],
    pub lambda: f64,
    pub epochs: u32,
    pub seed: u64,
    pub max_n: usize,
    pub df_buckets: u32,
    pub final_objective: f64,
}

impl CrfModel {
    /// Assemble a model from raw parts (used by the trainer and by tests
    /// that need hand-built weights).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        columns: FeatureColumns,
        feature_ids: HashMap<String, u32>,
        weights: Vec<f64>,
        transitions: [[f64; NUM_LABELS]; NUM_LABELS],
        lambda: f64,
        epochs: u32,
        seed: u64,
        max_n: usize,
        df_buckets: u32,
        final_objective: f64,
    ) -> Self {
        debug_assert_eq!(weights.len(), feature_ids.len() * NUM_LABELS);
        CrfModel {
            columns,
            feature_ids,
            weights,
            transitions,
            lambda,
            epochs,
            seed,
            max_n,
            df_buckets,
            final_objective,
        }
    }

    /// Map observations to the ids of known active features per position.
    pub fn index_features(&self, observations: &[CharObservation]) -> Vec<Vec<u32>> {
        observations
            .iter()
            .map(|obs| {
                features_at(obs, &self.columns)
                    .iter()
                    .filter_map(|f| self.feature_ids.get(f).copied())
                    .collect()
            })
            .collect()
    }

    pub fn unary_score(&self, active: &[u32], label: usize) -> f64 {
        active
            .iter()
            .map(|&f| self.weights[f as usize * NUM_LABELS + label])
            .sum()
    }

    /// Total score of a label path against indexed features.
    pub fn path_score(&self, indexed: &[Vec<u32>], path: &[Label]) -> f64 {
        let mut score = 0.0;
        for (t, label) in path.iter().enumerate() {
            score += self.unary_score(&indexed[t], label.index());
            if t > 0 {
                score += self.transitions[path[t - 1].index()][label.index()];
            }
        }
        score
    }

    /// `log Σ_paths exp(score)` by the forward recursion in log space.
    pub fn log_partition(&self, observations: &[CharObservation]) -> Result<f64> {
        if observations.is_empty() {
            return Err(Error::invalid("log_partition on an empty sequence"));
        }
        let indexed = self.index_features(observations);
        Ok(self.log_partition_indexed(&indexed))
    }

    pub(crate) fn log_partition_indexed(&self, indexed: &[Vec<u32>]) -> f64 {
        let mut alpha = [0.0f64; NUM_LABELS];
        for (y, a) in alpha.iter_mut().enumerate() {
            *a = self.unary_score(&indexed[0], y);
        }
        for feats in &indexed[1..] {
            let mut next = [0.0f64; NUM_LABELS];
            for (y, slot) in next.iter_mut().enumerate() {
                let mut terms = [0.0f64; NUM_LABELS];
                for (prev, t) in terms.iter_mut().enumerate() {
                    *t = alpha[prev] + self.transitions[prev][y];
                }
                *slot = log_sum_exp(&terms) + self.unary_score(feats, y);
            }
            alpha = next;
        }
        log_sum_exp(&alpha)
    }

    /// Highest-scoring label path; score ties are broken toward the lower
    /// label index at every backpointer decision and at the final argmax.
    pub fn viterbi(&self, observations: &[CharObservation]) -> Result<Vec<Label>> {
        if observations.is_empty() {
            return Err(Error::invalid("viterbi on an empty sequence"));
        }
        let indexed = self.index_features(observations);
        Ok(self.viterbi_indexed(&indexed))
    }

    pub(crate) fn viterbi_indexed(&self, indexed: &[Vec<u32>]) -> Vec<Label> {
        let n = indexed.len();
        let mut delta = vec![[0.0f64; NUM_LABELS]; n];
        let mut back = vec![[0usize; NUM_LABELS]; n];
        for y in 0..NUM_LABELS {
            delta[0][y] = self.unary_score(&indexed[0], y);
        }
        for t in 1..n {
            for y in 0..NUM_LABELS {
                let mut best_prev = 0;
                let mut best = delta[t - 1][0] + self.transitions[0][y];
                for prev in 1..NUM_LABELS {
                    let cand = delta[t - 1][prev] + self.transitions[prev][y];
                    if cand > best {
                        best = cand;
                        best_prev = prev;
                    }
                }
                delta[t][y] = best + self.unary_score(&indexed[t], y);
                back[t][y] = best_prev;
            }
        }
        let mut last = 0;
        for y in 1..NUM_LABELS {
            if delta[n - 1][y] > delta[n - 1][last] {
                last = y;
            }
        }
        let mut path = vec![last; n];
        for t in (1..n).rev() {
            path[t - 1] = back[t][path[t]];
        }
        path.into_iter().map(|y| LABELS[y]).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = self.to_json_string()?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut features: Vec<(String, u32)> =
            self.feature_ids.iter().map(|(k, &v)| (k.clone(), v)).collect();
        features.sort_by_key(|(_, id)| *id);
        let file = ModelFile {
            version: MODEL_VERSION,
            labels: LABELS.iter().map(|l| l.as_str().to_string()).collect(),
            columns: self.columns,
            max_n: self.max_n,
            df_buckets: self.df_buckets,
            features,
            weights: self.weights.clone(),
            transitions: self.transitions.iter().map(|r| r.to_vec()).collect(),
            lambda: self.lambda,
            epochs: self.epochs,
            seed: self.seed,
            final_objective: self.final_objective,
        };
        serde_json::to_string(&file).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&data)
    }

    pub fn from_json_str(data: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(data).map_err(|e| Error::Model(e.to_string()))?;
        if file.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                file.version
            )));
        }
        let expected: Vec<String> = LABELS.iter().map(|l| l.as_str().to_string()).collect();
        if file.labels != expected {
            return Err(Error::Model(format!(
                "label order {:?} does not match {:?}",
                file.labels, expected
            )));
        }
        if file.weights.len() != file.features.len() * NUM_LABELS {
            return Err(Error::Model(format!(
                "weight table has {} entries for {} features",
                file.weights.len(),
                file.features.len()
            )));
        }
        if file.transitions.len() != NUM_LABELS
            || file.transitions.iter().any(|r| r.len() != NUM_LABELS)
        {
            return Err(Error::Model("transition table is not 5x5".into()));
        }
        if !file.weights.iter().all(|w| w.is_finite())
            || !file.transitions.iter().flatten().all(|w| w.is_finite())
        {
            return Err(Error::Model("non-finite weight in model file".into()));
        }
        let mut transitions = [[0.0; NUM_LABELS]; NUM_LABELS];
        for (i, row) in file.transitions.iter().enumerate() {
            transitions[i].copy_from_slice(row);
        }
        Ok(CrfModel {
            columns: file.columns,
            feature_ids: file.features.into_iter().collect(),
            weights: file.weights,
            transitions,
            lambda: file.lambda,
            epochs: file.epochs,
            seed: file.seed,
            max_n: file.max_n,
            df_buckets: file.df_buckets,
            final_objective: file.final_objective,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    labels: Vec<String>,
    columns: FeatureColumns,
    max_n: usize,
    df_buckets: u32,
    features: Vec<(String, u32)>,
    weights: Vec<f64>,
    transitions: Vec<Vec<f64>>,
    lambda: f64,
    epochs: u32,
    seed: u64,
    final_objective: f64,
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::features::CHAR_TEMPLATES;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// A model whose feature ids are synthetic; sequences are built as raw
    /// indexed feature lists.
    fn random_model(rng: &mut ChaCha8Rng, n_features: usize) -> CrfModel {
        let feature_ids: HashMap<String, u32> =
            (0..n_features).map(|i| (format!("F{i}"), i as u32)).collect();
        let weights: Vec<f64> = (0..n_features * NUM_LABELS)
            .map(|_| rng.gen_range(-1.5..1.5))
            .collect();
        let mut transitions = [[0.0; NUM_LABELS]; NUM_LABELS];
        for row in transitions.iter_mut() {
            for w in row.iter_mut() {
                *w = rng.gen_range(-1.5..1.5);
            }
        }
        CrfModel::from_parts(
            FeatureColumns::plain(),
            feature_ids,
            weights,
            transitions,
            0.0,
            0,
            0,
            4,
            8,
            0.0,
        )
    }

    fn random_sequence(rng: &mut ChaCha8Rng, n_features: usize, len: usize) -> Vec<Vec<u32>> {
        (0..len)
            .map(|_| {
                let k = rng.gen_range(1..=3);
                (0..k).map(|_| rng.gen_range(0..n_features as u32)).collect()
            })
            .collect()
    }

    fn enumerate_paths(len: usize) -> Vec<Vec<Label>> {
        let mut paths = vec![vec![]];
        for _ in 0..len {
            let mut next = Vec::new();
            for p in &paths {
                for &l in &LABELS {
                    let mut q = p.clone();
                    q.push(l);
                    next.push(q);
                }
            }
            paths = next;
        }
        paths
    }

    #[test]
    fn zero_weights_partition_is_t_ln5() {
        let model = random_model(&mut ChaCha8Rng::seed_from_u64(0), 4);
        let zero = CrfModel {
            weights: vec![0.0; model.weights.len()],
            transitions: [[0.0; NUM_LABELS]; NUM_LABELS],
            ..model
        };
        for t in 1..=6 {
            let seq: Vec<Vec<u32>> = vec![vec![0]; t];
            let lp = zero.log_partition_indexed(&seq);
            assert!((lp - t as f64 * 5.0f64.ln()).abs() < 1e-12, "T={t}");
        }
    }

    #[test]
    fn length_one_partition_is_lse_of_unaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = random_model(&mut rng, 6);
        let seq = random_sequence(&mut rng, 6, 1);
        let scores: Vec<f64> = (0..NUM_LABELS).map(|y| model.unary_score(&seq[0], y)).collect();
        assert!((model.log_partition_indexed(&seq) - log_sum_exp(&scores)).abs() < 1e-12);
    }

    #[test]
    fn partition_matches_brute_force_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let model = random_model(&mut rng, 5);
            let len = rng.gen_range(1..=4);
            let seq = random_sequence(&mut rng, 5, len);
            let brute: Vec<f64> = enumerate_paths(len)
                .iter()
                .map(|p| model.path_score(&seq, p))
                .collect();
            let expect = log_sum_exp(&brute);
            let got = model.log_partition_indexed(&seq);
            assert!((got - expect).abs() <= 1e-9, "got {got}, expect {expect}");
        }
    }

    #[test]
    fn path_probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = random_model(&mut rng, 5);
        let seq = random_sequence(&mut rng, 5, 3);
        let log_z = model.log_partition_indexed(&seq);
        let total: f64 = enumerate_paths(3)
            .iter()
            .map(|p| (model.path_score(&seq, p) - log_z).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
        for p in enumerate_paths(3) {
            let prob = (model.path_score(&seq, &p) - log_z).exp();
            assert!(prob > 0.0 && prob <= 1.0 + 1e-12);
        }
    }

    /// Brute-force argmax with the documented tie-break. Preferring the
    /// lower label index at each backpointer decision picks, among all
    /// score-optimal paths, the one whose reversed index sequence is
    /// lexicographically smallest.
    fn brute_force_viterbi(model: &CrfModel, seq: &[Vec<u32>]) -> Vec<Label> {
        let rev = |p: &[Label]| p.iter().rev().map(|l| l.index()).collect::<Vec<_>>();
        let mut best: Option<(f64, Vec<Label>)> = None;
        for p in enumerate_paths(seq.len()) {
            let s = model.path_score(seq, &p);
            let replace = match &best {
                None => true,
                Some((bs, bp)) => s > *bs || (s == *bs && rev(&p) < rev(bp)),
            };
            if replace {
                best = Some((s, p));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn zero_weights_decode_to_all_b() {
        let model = random_model(&mut ChaCha8Rng::seed_from_u64(4), 4);
        let zero = CrfModel {
            weights: vec![0.0; model.weights.len()],
            transitions: [[0.0; NUM_LABELS]; NUM_LABELS],
            ..model
        };
        let seq: Vec<Vec<u32>> = vec![vec![0]; 5];
        assert_eq!(zero.viterbi_indexed(&seq), vec![Label::B; 5]);
    }

    #[test]
    fn viterbi_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let model = random_model(&mut rng, 5);
            let len = rng.gen_range(1..=4);
            let seq = random_sequence(&mut rng, 5, len);
            assert_eq!(model.viterbi_indexed(&seq), brute_force_viterbi(&model, &seq));
        }
    }

    #[test]
    fn dominant_o_unary_decodes_all_o() {
        let feature_ids: HashMap<String, u32> = [("F0".to_string(), 0u32)].into();
        let mut weights = vec![0.0; NUM_LABELS];
        weights[Label::O.index()] = 50.0;
        let model = CrfModel::from_parts(
            FeatureColumns::plain(),
            feature_ids,
            weights,
            [[0.0; NUM_LABELS]; NUM_LABELS],
            0.0,
            0,
            0,
            4,
            8,
            0.0,
        );
        let seq: Vec<Vec<u32>> = vec![vec![0]; 4];
        assert_eq!(model.viterbi_indexed(&seq), vec![Label::O; 4]);
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let model = random_model(&mut ChaCha8Rng::seed_from_u64(6), 3);
        assert!(model.log_partition(&[]).is_err());
        assert!(model.viterbi(&[]).is_err());
    }

    #[test]
    fn serialization_roundtrip_preserves_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = random_model(&mut rng, 8);
        let json = model.to_json_string().unwrap();
        let loaded = CrfModel::from_json_str(&json).unwrap();
        let seq = random_sequence(&mut rng, 8, 4);
        assert_eq!(
            model.log_partition_indexed(&seq),
            loaded.log_partition_indexed(&seq)
        );
        assert_eq!(model.viterbi_indexed(&seq), loaded.viterbi_indexed(&seq));
    }

    #[test]
    fn wrong_label_order_is_rejected() {
        let model = random_model(&mut ChaCha8Rng::seed_from_u64(8), 2);
        let json = model.to_json_string().unwrap();
        let tampered = json.replace(
            r#"["B","I","O","E","S"]"#,
            r#"["B","I","O","S","E"]"#,
        );
        match CrfModel::from_json_str(&tampered) {
            Err(Error::Model(msg)) => assert!(msg.contains("label order")),
            other => panic!("expected label-order error, got {other:?}"),
        }
    }

    #[test]
    fn template_count_is_frozen() {
        assert_eq!(CHAR_TEMPLATES.len(), 10);
    }
}
