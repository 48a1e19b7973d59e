//! Entity discovery and linking for short natural-language questions over a
//! local knowledge graph.
//!
//! The pipeline has two halves. Discovery finds mention spans in a question
//! by three strategies: n-gram retrieval against the knowledge-graph surface
//! index, a character-level linear-chain CRF with BIOES labels, and an
//! ensemble that feeds the retrieval tags to the CRF as a feature column,
//! optionally followed by a lexicon-checked union of the two outputs.
//! Linking scores each mention's candidate entities with a feature stack
//! (saliency-weighted embedding similarity, TF-IDF/LSI/LDA text similarity
//! against entity names and attributes, log popularity) and ranks them with
//! a pairwise-trained linear model.
//!
//! Everything is deterministic given explicit seeds; stores and fitted
//! models are immutable after construction and safe to share across
//! threads.

pub mod crf;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod kg_store;
pub mod qed;
pub mod question;
pub mod ranker;
pub mod segmentation;
pub mod similarity;
pub mod text;

pub use error::{Error, Result};
pub use kg_store::{KgEntity, KgStore};
pub use qed::{Mention, MentionSource};
pub use question::{GoldMention, Question};
pub use segmentation::{CandidateSpan, Token};
