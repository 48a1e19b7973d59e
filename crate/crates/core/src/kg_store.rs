//! Knowledge-graph ingestion and the exact-match surface index used for
//! candidate generation, plus the lexicon and stopword list.
//!
//! File formats: the KG is JSON Lines (one entity object per line), the
//! lexicon is `term<TAB>pos` with the POS optional, stopwords are one term
//! per line. All indexes are keyed by [`crate::text::normalize`]d surface
//! forms and the store is immutable after loading.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{char_len, normalize};

/// One knowledge-graph entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KgEntity {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    /// Attribute name → attribute value text, in stable (sorted) order.
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    /// Stored hit count standing in for a search-engine result count.
    /// Clamped to ≥ 1 at ingestion so `log` is always defined.
    #[serde(default = "default_popularity")]
    pub popularity: u64,
}

fn default_popularity() -> u64 {
    1
}

/// Immutable store over the KG, lexicon, and stopword list.
#[derive(Debug, Default)]
pub struct KgStore {
    entities: BTreeMap<String, KgEntity>,
    /// normalized name/alias → owning entity ids.
    surface_index: HashMap<String, BTreeSet<String>>,
    /// normalized term → POS tag (`None` when the lexicon line had none).
    lexicon: HashMap<String, Option<String>>,
    /// Longest lexicon entry in characters; the window for forward
    /// maximum matching.
    lexicon_max_chars: usize,
    stopwords: HashSet<String>,
}

impl KgStore {
    /// Load a JSON Lines KG file. Blank lines are skipped; a malformed
    /// line or duplicate id aborts the load.
    pub fn load_kg(path: &Path) -> Result<Self> {
        let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut store = KgStore::default();
        for (lineno, line) in data.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entity: KgEntity = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: e.to_string(),
            })?;
            store.insert_entity(entity).map_err(|e| match e {
                Error::InvalidInput(msg) => Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg,
                },
                Error::DuplicateId { id, .. } => Error::DuplicateId {
                    id,
                    path: path.display().to_string(),
                    line: lineno + 1,
                },
                other => other,
            })?;
        }
        Ok(store)
    }

    /// Build a store from in-memory entities (tests, fixtures).
    pub fn from_entities(entities: Vec<KgEntity>) -> Result<Self> {
        let mut store = KgStore::default();
        for entity in entities {
            store.insert_entity(entity)?;
        }
        Ok(store)
    }

    fn insert_entity(&mut self, mut entity: KgEntity) -> Result<()> {
        if entity.name.is_empty() {
            return Err(Error::invalid(format!(
                "entity {:?} has an empty name",
                entity.id
            )));
        }
        if self.entities.contains_key(&entity.id) {
            return Err(Error::DuplicateId {
                id: entity.id,
                path: String::new(),
                line: 0,
            });
        }
        entity.popularity = entity.popularity.max(1);
        let mut surfaces = vec![entity.name.clone()];
        surfaces.extend(entity.aliases.iter().cloned());
        for surface in surfaces {
            let key = normalize(&surface);
            if key.is_empty() {
                continue;
            }
            self.surface_index
                .entry(key)
                .or_default()
                .insert(entity.id.clone());
        }
        self.entities.insert(entity.id.clone(), entity);
        Ok(())
    }

    /// Load a `term<TAB>pos` lexicon file; the POS column is optional.
    /// Lines that normalize to the empty string are skipped. The first
    /// occurrence of a term wins.
    pub fn load_lexicon(&mut self, path: &Path) -> Result<()> {
        let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for line in data.lines() {
            let mut cols = line.splitn(2, '\t');
            let term = cols.next().unwrap_or("");
            let pos = cols.next().map(|p| p.trim().to_string()).filter(|p| !p.is_empty());
            self.add_lexicon_term(term, pos.as_deref());
        }
        Ok(())
    }

    pub fn add_lexicon_term(&mut self, term: &str, pos: Option<&str>) {
        let key = normalize(term);
        if key.is_empty() {
            return;
        }
        self.lexicon_max_chars = self.lexicon_max_chars.max(char_len(&key));
        self.lexicon
            .entry(key)
            .or_insert_with(|| pos.map(str::to_string));
    }

    /// Load a one-term-per-line stopword file.
    pub fn load_stopwords(&mut self, path: &Path) -> Result<()> {
        let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for line in data.lines() {
            self.add_stopword(line);
        }
        Ok(())
    }

    pub fn add_stopword(&mut self, term: &str) {
        let key = normalize(term);
        if !key.is_empty() {
            self.stopwords.insert(key);
        }
    }

    /// Ids of entities whose name or alias normalizes equal to `surface`.
    pub fn lookup_surface(&self, surface: &str) -> BTreeSet<String> {
        self.lookup_normalized(&normalize(surface))
    }

    /// Same as [`lookup_surface`](Self::lookup_surface) for a key that is
    /// already normalized.
    pub fn lookup_normalized(&self, key: &str) -> BTreeSet<String> {
        self.surface_index.get(key).cloned().unwrap_or_default()
    }

    pub fn in_lexicon(&self, term: &str) -> bool {
        self.lexicon.contains_key(&normalize(term))
    }

    /// POS tag of a normalized lexicon key, when the lexicon carries one.
    pub fn lexicon_pos(&self, key: &str) -> Option<&str> {
        self.lexicon.get(key).and_then(|p| p.as_deref())
    }

    pub fn lexicon_contains_key(&self, key: &str) -> bool {
        self.lexicon.contains_key(key)
    }

    pub fn lexicon_max_chars(&self) -> usize {
        self.lexicon_max_chars
    }

    pub fn is_stopword(&self, term: &str) -> bool {
        self.stopwords.contains(&normalize(term))
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    pub fn entity(&self, id: &str) -> Option<&KgEntity> {
        self.entities.get(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &KgEntity> {
        self.entities.values()
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }
}
