//! Character-level linear-chain CRF with BIOES labels: feature extraction,
//! maximum-likelihood training by gradient ascent on the forward-backward
//! expectations, and Viterbi decoding.

mod bioes;
mod features;
mod model;
mod train;

pub use bioes::{bioes_decode, bioes_encode, Label, LABELS, NUM_LABELS};
pub use features::{extract_features, features_at, CharObservation, FeatureColumns, WordBoundary};
pub use model::CrfModel;
pub use train::{train_crf, train_crf_with_history, CrfTrainConfig, CrfTrainer};
