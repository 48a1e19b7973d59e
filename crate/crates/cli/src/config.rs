//! The pipeline configuration file: one JSON document with per-stage
//! sections, all optional with defaults. Flags override config fields;
//! every command hashes the effective configuration into the run
//! manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub paths: PathsSection,
    pub crf: CrfSection,
    pub similarity: SimilaritySection,
    pub ranker: RankerSection,
    pub fixture: FixtureSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    pub kg: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub questions: Option<PathBuf>,
    pub model_cache: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrfSection {
    pub lambda: f64,
    pub epochs: u32,
    pub learning_rate: f64,
    pub seed: u64,
    pub max_n: usize,
    pub df_buckets: u32,
}

impl Default for CrfSection {
    fn default() -> Self {
        CrfSection {
            lambda: 0.1,
            epochs: 200,
            learning_rate: 0.5,
            seed: 42,
            max_n: 4,
            df_buckets: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimilaritySection {
    pub k1: f64,
    pub b: f64,
    pub lsi_rank: usize,
    pub lda_topics: usize,
    /// Document-topic prior; null means 50/K.
    pub lda_alpha: Option<f64>,
    pub lda_beta: f64,
    pub lda_train_sweeps: usize,
    pub lda_infer_sweeps: usize,
    pub seed: u64,
    /// `per_mention` or `kg_global`.
    pub avge_mode: String,
    /// Tokenize corpus and question text by lexicon matching instead of
    /// whitespace.
    pub segment_corpus: bool,
}

impl Default for SimilaritySection {
    fn default() -> Self {
        SimilaritySection {
            k1: 1.5,
            b: 0.75,
            lsi_rank: 100,
            lda_topics: 50,
            lda_alpha: None,
            lda_beta: 0.01,
            lda_train_sweeps: 500,
            lda_infer_sweeps: 50,
            seed: 7,
            avge_mode: "per_mention".into(),
            segment_corpus: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankerSection {
    pub lambda: f64,
    pub epochs: u32,
    pub eta0: f64,
    pub seed: u64,
}

impl Default for RankerSection {
    fn default() -> Self {
        RankerSection {
            lambda: 1e-3,
            epochs: 200,
            eta0: 0.1,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixtureSection {
    pub seed: u64,
    pub n_entities: usize,
    pub n_questions: usize,
    pub vocab_size: usize,
    pub embedding_dim: usize,
    pub ambiguity_rate: f64,
}

impl Default for FixtureSection {
    fn default() -> Self {
        FixtureSection {
            seed: 42,
            n_entities: 50,
            n_questions: 200,
            vocab_size: 300,
            embedding_dim: 16,
            ambiguity_rate: 0.3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            holdout_fraction: 0.2,
            seed: 99,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let config = match path {
            None => PipelineConfig::default(),
            Some(p) => {
                let data = fs::read_to_string(p)
                    .with_context(|| format!("cannot read config file {}", p.display()))?;
                serde_json::from_str(&data)
                    .with_context(|| format!("invalid config file {}", p.display()))?
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.crf;
        if c.lambda < 0.0 {
            bail!("config field crf.lambda must be non-negative");
        }
        if c.learning_rate <= 0.0 {
            bail!("config field crf.learning_rate must be positive");
        }
        if c.max_n == 0 {
            bail!("config field crf.max_n must be at least 1");
        }
        if c.df_buckets == 0 {
            bail!("config field crf.df_buckets must be at least 1");
        }
        let s = &self.similarity;
        if s.k1 < 0.0 {
            bail!("config field similarity.k1 must be non-negative");
        }
        if !(0.0..=1.0).contains(&s.b) {
            bail!("config field similarity.b must lie in [0, 1]");
        }
        if s.lsi_rank == 0 {
            bail!("config field similarity.lsi_rank must be at least 1");
        }
        if s.lda_topics == 0 {
            bail!("config field similarity.lda_topics must be at least 1");
        }
        if s.lda_beta <= 0.0 || s.lda_alpha.is_some_and(|a| a <= 0.0) {
            bail!("config fields similarity.lda_alpha / lda_beta must be positive");
        }
        if s.avge_mode != "per_mention" && s.avge_mode != "kg_global" {
            bail!("config field similarity.avge_mode must be per_mention or kg_global");
        }
        let r = &self.ranker;
        if r.lambda < 0.0 {
            bail!("config field ranker.lambda must be non-negative");
        }
        if r.eta0 <= 0.0 {
            bail!("config field ranker.eta0 must be positive");
        }
        let f = &self.fixture;
        if !(0.0..=1.0).contains(&f.ambiguity_rate) {
            bail!("config field fixture.ambiguity_rate must lie in [0, 1]");
        }
        let w = &self.sweep;
        if !(0.0 < w.holdout_fraction && w.holdout_fraction < 1.0) {
            bail!("config field sweep.holdout_fraction must lie in (0, 1)");
        }
        Ok(())
    }

    /// Resolve a required path, naming the missing field.
    pub fn require(path: &Option<PathBuf>, field: &str) -> Result<PathBuf> {
        path.clone()
            .with_context(|| format!("config field paths.{field} is required for this command"))
    }

    pub fn output_dir(&self) -> Result<PathBuf> {
        Self::require(&self.paths.output_dir, "output_dir")
    }

    /// Hash of the effective (post-override) configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The run manifest: one entry per command that wrote into the run
/// directory, recording the config hash and tool version.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub commands: BTreeMap<String, ManifestEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub config_hash: String,
    pub version: String,
}

impl Manifest {
    pub fn update(output_dir: &Path, command: &str, config: &PipelineConfig) -> Result<()> {
        fs::create_dir_all(output_dir)
            .with_context(|| format!("cannot create output dir {}", output_dir.display()))?;
        let path = output_dir.join("manifest.json");
        let mut manifest: Manifest = match fs::read_to_string(&path) {
            Ok(data) => serde_json::from_str(&data)
                .with_context(|| format!("corrupt manifest {}", path.display()))?,
            Err(_) => Manifest::default(),
        };
        manifest.commands.insert(
            command.to_string(),
            ManifestEntry {
                config_hash: config.hash(),
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
        );
        let json = serde_json::to_string_pretty(&manifest)?;
        fs::write(&path, json).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"crf": {{"lamda": 0.1}}}}"#).unwrap();
        let err = PipelineConfig::load(Some(f.path())).unwrap_err();
        assert!(format!("{err:#}").contains("lamda"));
    }

    #[test]
    fn bad_range_names_the_field() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"similarity": {{"b": 1.5}}}}"#).unwrap();
        let err = PipelineConfig::load(Some(f.path())).unwrap_err();
        assert!(format!("{err:#}").contains("similarity.b"));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = PipelineConfig::default();
        let mut b = PipelineConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.crf.epochs = 7;
        assert_ne!(a.hash(), b.hash());
    }
}
