//! Maximum-likelihood CRF training: full-batch gradient ascent on the
//! regularized log-likelihood, with step halving whenever a proposed step
//! would decrease the objective. Deterministic: weights start at zero and
//! every float operation runs in a fixed order.

// Fixed five-label tables are indexed directly throughout the
// recursions; iterator rewrites obscure the math.
#![allow(clippy::needless_range_loop)]

use std::collections::HashMap;

use crate::crf::bioes::{Label, NUM_LABELS};
use crate::crf::features::{features_at, CharObservation, FeatureColumns};
use crate::crf::model::{log_sum_exp, CrfModel};
use crate::error::{Error, Result};

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct CrfTrainConfig {
    pub lambda: f64,
    pub epochs: u32,
    /// Initial step size; halved (persistently) whenever a step would
    /// decrease the objective.
    pub learning_rate: f64,
    pub seed: u64,
    pub columns: FeatureColumns,
    pub max_n: usize,
    pub df_buckets: u32,
}

impl Default for CrfTrainConfig {
    fn default() -> Self {
        CrfTrainConfig {
            lambda: 0.1,
            epochs: 200,
            learning_rate: 0.5,
            seed: 42,
            columns: FeatureColumns::ensemble(),
            max_n: 4,
            df_buckets: 8,
        }
    }
}

/// Indexed corpus plus the constant observed feature counts. Parameters
/// are one flat vector: `n_features * 5` unary weights followed by the
/// 25 transition weights in row-major order.
pub struct CrfTrainer {
    sequences: Vec<Vec<Vec<u32>>>,
    golds: Vec<Vec<usize>>,
    n_features: usize,
    observed: Vec<f64>,
    lambda: f64,
}

impl CrfTrainer {
    /// Index the corpus, assigning feature ids in first-seen order.
    pub fn from_corpus(
        corpus: &[(Vec<CharObservation>, Vec<Label>)],
        columns: &FeatureColumns,
        lambda: f64,
    ) -> Result<(Self, HashMap<String, u32>)> {
        if corpus.is_empty() {
            return Err(Error::invalid("cannot train a CRF on an empty corpus"));
        }
        let mut feature_ids: HashMap<String, u32> = HashMap::new();
        let mut sequences = Vec::with_capacity(corpus.len());
        let mut golds: Vec<Vec<usize>> = Vec::with_capacity(corpus.len());
        for (i, (obs, labels)) in corpus.iter().enumerate() {
            if obs.is_empty() {
                return Err(Error::invalid(format!("training sequence {i} is empty")));
            }
            if obs.len() != labels.len() {
                return Err(Error::invalid(format!(
                    "training sequence {i}: {} observations vs {} labels",
                    obs.len(),
                    labels.len()
                )));
            }
            let indexed: Vec<Vec<u32>> = obs
                .iter()
                .map(|o| {
                    features_at(o, columns)
                        .into_iter()
                        .map(|f| {
                            let next = feature_ids.len() as u32;
                            *feature_ids.entry(f).or_insert(next)
                        })
                        .collect()
                })
                .collect();
            sequences.push(indexed);
            golds.push(labels.iter().map(|l| l.index()).collect());
        }

        let n_features = feature_ids.len();
        let mut observed = vec![0.0; n_features * NUM_LABELS + NUM_LABELS * NUM_LABELS];
        let trans_ofs = n_features * NUM_LABELS;
        for (seq, gold) in sequences.iter().zip(&golds) {
            for (t, feats) in seq.iter().enumerate() {
                for &f in feats {
                    observed[f as usize * NUM_LABELS + gold[t]] += 1.0;
                }
                if t > 0 {
                    observed[trans_ofs + gold[t - 1] * NUM_LABELS + gold[t]] += 1.0;
                }
            }
        }

        Ok((
            CrfTrainer {
                sequences,
                golds,
                n_features,
                observed,
                lambda,
            },
            feature_ids,
        ))
    }

    pub fn n_params(&self) -> usize {
        self.n_features * NUM_LABELS + NUM_LABELS * NUM_LABELS
    }

    fn unary(&self, params: &[f64], feats: &[u32], y: usize) -> f64 {
        feats
            .iter()
            .map(|&f| params[f as usize * NUM_LABELS + y])
            .sum()
    }

    fn trans(&self, params: &[f64], prev: usize, y: usize) -> f64 {
        params[self.n_features * NUM_LABELS + prev * NUM_LABELS + y]
    }

    /// `Σ_i (score(gold_i) − log Z_i) − λ‖params‖²`.
    pub fn objective(&self, params: &[f64]) -> f64 {
        let mut total = 0.0;
        for (seq, gold) in self.sequences.iter().zip(&self.golds) {
            total += self.gold_score(params, seq, gold) - self.log_z(params, seq);
        }
        total - self.lambda * params.iter().map(|w| w * w).sum::<f64>()
    }

    fn gold_score(&self, params: &[f64], seq: &[Vec<u32>], gold: &[usize]) -> f64 {
        let mut s = 0.0;
        for (t, feats) in seq.iter().enumerate() {
            s += self.unary(params, feats, gold[t]);
            if t > 0 {
                s += self.trans(params, gold[t - 1], gold[t]);
            }
        }
        s
    }

    fn log_z(&self, params: &[f64], seq: &[Vec<u32>]) -> f64 {
        let mut alpha = [0.0f64; NUM_LABELS];
        for (y, a) in alpha.iter_mut().enumerate() {
            *a = self.unary(params, &seq[0], y);
        }
        for feats in &seq[1..] {
            let mut next = [0.0f64; NUM_LABELS];
            for (y, slot) in next.iter_mut().enumerate() {
                let mut terms = [0.0f64; NUM_LABELS];
                for (p, term) in terms.iter_mut().enumerate() {
                    *term = alpha[p] + self.trans(params, p, y);
                }
                *slot = log_sum_exp(&terms) + self.unary(params, feats, y);
            }
            alpha = next;
        }
        log_sum_exp(&alpha)
    }

    /// Objective and its exact gradient (observed − expected counts minus
    /// the regularizer term), via forward-backward marginals.
    pub fn objective_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let trans_ofs = self.n_features * NUM_LABELS;
        let mut expected = vec![0.0; self.n_params()];
        let mut obj = 0.0;

        for (seq, gold) in self.sequences.iter().zip(&self.golds) {
            let n = seq.len();
            let mut alpha = vec![[0.0f64; NUM_LABELS]; n];
            let mut beta = vec![[0.0f64; NUM_LABELS]; n];
            for y in 0..NUM_LABELS {
                alpha[0][y] = self.unary(params, &seq[0], y);
            }
            for t in 1..n {
                for y in 0..NUM_LABELS {
                    let mut terms = [0.0f64; NUM_LABELS];
                    for (p, term) in terms.iter_mut().enumerate() {
                        *term = alpha[t - 1][p] + self.trans(params, p, y);
                    }
                    alpha[t][y] = log_sum_exp(&terms) + self.unary(params, &seq[t], y);
                }
            }
            for t in (0..n - 1).rev() {
                for p in 0..NUM_LABELS {
                    let mut terms = [0.0f64; NUM_LABELS];
                    for (y, term) in terms.iter_mut().enumerate() {
                        *term = self.trans(params, p, y)
                            + self.unary(params, &seq[t + 1], y)
                            + beta[t + 1][y];
                    }
                    beta[t][p] = log_sum_exp(&terms);
                }
            }
            let log_z = log_sum_exp(&alpha[n - 1]);
            obj += self.gold_score(params, seq, gold) - log_z;

            for t in 0..n {
                for y in 0..NUM_LABELS {
                    let m = (alpha[t][y] + beta[t][y] - log_z).exp();
                    for &f in &seq[t] {
                        expected[f as usize * NUM_LABELS + y] += m;
                    }
                }
                if t > 0 {
                    for p in 0..NUM_LABELS {
                        for y in 0..NUM_LABELS {
                            let m = (alpha[t - 1][p]
                                + self.trans(params, p, y)
                                + self.unary(params, &seq[t], y)
                                + beta[t][y]
                                - log_z)
                                .exp();
                            expected[trans_ofs + p * NUM_LABELS + y] += m;
                        }
                    }
                }
            }
        }

        obj -= self.lambda * params.iter().map(|w| w * w).sum::<f64>();
        let grad: Vec<f64> = (0..self.n_params())
            .map(|i| self.observed[i] - expected[i] - 2.0 * self.lambda * params[i])
            .collect();
        (obj, grad)
    }

    /// Run gradient ascent from zero weights. Returns the final parameters
    /// and the per-epoch objective history (entry 0 is the objective at
    /// zero); the history is non-decreasing by construction.
    pub fn run(&self, epochs: u32, learning_rate: f64) -> (Vec<f64>, Vec<f64>) {
        let mut params = vec![0.0; self.n_params()];
        let mut eta = learning_rate;
        let (mut obj, mut grad) = self.objective_and_gradient(&params);
        let mut history = vec![obj];
        for _ in 0..epochs {
            let mut accepted = false;
            for _ in 0..60 {
                let proposal: Vec<f64> = params
                    .iter()
                    .zip(&grad)
                    .map(|(w, g)| w + eta * g)
                    .collect();
                let new_obj = self.objective(&proposal);
                if new_obj >= obj {
                    params = proposal;
                    obj = new_obj;
                    accepted = true;
                    break;
                }
                eta /= 2.0;
            }
            if !accepted {
                break;
            }
            history.push(obj);
            grad = self.objective_and_gradient(&params).1;
        }
        (params, history)
    }
}

/// Train a model on (observations, gold labels) pairs.
pub fn train_crf(
    corpus: &[(Vec<CharObservation>, Vec<Label>)],
    config: &CrfTrainConfig,
) -> Result<CrfModel> {
    train_crf_with_history(corpus, config).map(|(model, _)| model)
}

/// As [`train_crf`], also returning the per-epoch objective history.
pub fn train_crf_with_history(
    corpus: &[(Vec<CharObservation>, Vec<Label>)],
    config: &CrfTrainConfig,
) -> Result<(CrfModel, Vec<f64>)> {
    if config.lambda < 0.0 {
        return Err(Error::invalid("lambda must be non-negative"));
    }
    let (trainer, feature_ids) = CrfTrainer::from_corpus(corpus, &config.columns, config.lambda)?;
    let (params, history) = trainer.run(config.epochs, config.learning_rate);

    let n_features = feature_ids.len();
    let weights = params[..n_features * NUM_LABELS].to_vec();
    let mut transitions = [[0.0; NUM_LABELS]; NUM_LABELS];
    for p in 0..NUM_LABELS {
        for y in 0..NUM_LABELS {
            transitions[p][y] = params[n_features * NUM_LABELS + p * NUM_LABELS + y];
        }
    }
    let model = CrfModel::from_parts(
        config.columns,
        feature_ids,
        weights,
        transitions,
        config.lambda,
        config.epochs,
        config.seed,
        config.max_n,
        config.df_buckets,
        *history.last().expect("history is never empty"),
    );
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::bioes::bioes_encode;
    use crate::crf::features::extract_features;
    use crate::kg_store::{KgEntity, KgStore};
    use crate::segmentation::segment_fmm;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::collections::{BTreeMap, HashSet};

    /// Tiny two-word world: `xx` is always a mention, `q` never is.
    fn toy_corpus() -> Vec<(Vec<CharObservation>, Vec<Label>)> {
        let mut store = KgStore::from_entities(vec![KgEntity {
            id: "E1".into(),
            name: "xx".into(),
            aliases: vec![],
            attributes: BTreeMap::new(),
            popularity: 1,
        }])
        .unwrap();
        store.add_lexicon_term("xx", Some("n"));
        store.add_lexicon_term("q", Some("u"));

        let texts: Vec<(&str, Vec<(usize, usize)>)> = vec![
            ("xxq", vec![(0, 2)]),
            ("qxx", vec![(1, 3)]),
            ("qxxq", vec![(1, 3)]),
            ("xx", vec![(0, 2)]),
            ("qq", vec![]),
            ("q", vec![]),
        ];
        texts
            .into_iter()
            .map(|(text, spans)| {
                let tokens = segment_fmm(text, &store);
                let obs = extract_features(
                    text,
                    &tokens,
                    &[],
                    &HashMap::new(),
                    &HashSet::new(),
                    8,
                );
                let labels = bioes_encode(text.chars().count(), &spans).unwrap();
                (obs, labels)
            })
            .collect()
    }

    #[test]
    fn separable_corpus_is_learned_exactly() {
        let corpus = toy_corpus();
        let cfg = CrfTrainConfig {
            lambda: 0.01,
            epochs: 150,
            columns: FeatureColumns::plain(),
            ..CrfTrainConfig::default()
        };
        let model = train_crf(&corpus, &cfg).unwrap();
        for (obs, gold) in &corpus {
            assert_eq!(&model.viterbi(obs).unwrap(), gold);
        }
    }

    #[test]
    fn huge_lambda_pins_weights_near_zero() {
        let corpus = toy_corpus();
        let cfg = CrfTrainConfig {
            lambda: 1e6,
            epochs: 50,
            columns: FeatureColumns::plain(),
            ..CrfTrainConfig::default()
        };
        let model = train_crf(&corpus, &cfg).unwrap();
        assert!(model.weights.iter().all(|w| w.abs() < 1e-3));
        assert!(model
            .transitions
            .iter()
            .flatten()
            .all(|w| w.abs() < 1e-3));
    }

    #[test]
    fn objective_history_is_non_decreasing() {
        let corpus = toy_corpus();
        let (trainer, _) = CrfTrainer::from_corpus(&corpus, &FeatureColumns::plain(), 0.1).unwrap();
        let (_, history) = trainer.run(80, 0.5);
        assert!(history.len() > 1);
        for pair in history.windows(2) {
            assert!(pair[1] >= pair[0], "objective decreased: {pair:?}");
        }
        assert!(history.last().unwrap() > history.first().unwrap());
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let corpus = toy_corpus();
        let (trainer, _) = CrfTrainer::from_corpus(&corpus, &FeatureColumns::plain(), 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = 1e-5;
        for _ in 0..3 {
            let params: Vec<f64> = (0..trainer.n_params())
                .map(|_| rng.gen_range(-0.8..0.8))
                .collect();
            let (_, grad) = trainer.objective_and_gradient(&params);
            for i in 0..trainer.n_params() {
                let mut plus = params.clone();
                plus[i] += h;
                let mut minus = params.clone();
                minus[i] -= h;
                let fd = (trainer.objective(&plus) - trainer.objective(&minus)) / (2.0 * h);
                let denom = grad[i].abs().max(fd.abs()).max(1e-6);
                assert!(
                    (grad[i] - fd).abs() / denom <= 1e-4,
                    "coordinate {i}: analytic {} vs fd {fd}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(train_crf(&[], &CrfTrainConfig::default()).is_err());
    }

    #[test]
    fn zero_epochs_emit_zero_weights() {
        let corpus = toy_corpus();
        let cfg = CrfTrainConfig {
            epochs: 0,
            columns: FeatureColumns::plain(),
            ..CrfTrainConfig::default()
        };
        let model = train_crf(&corpus, &cfg).unwrap();
        assert!(model.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = toy_corpus();
        let cfg = CrfTrainConfig {
            epochs: 30,
            columns: FeatureColumns::plain(),
            ..CrfTrainConfig::default()
        };
        let a = train_crf(&corpus, &cfg).unwrap().to_json_string().unwrap();
        let b = train_crf(&corpus, &cfg).unwrap().to_json_string().unwrap();
        assert_eq!(a, b);
    }
}
