//! Document-frequency table with smoothed inverse document frequency:
//! `idf(w) = ln((N + 1) / (df(w) + 1))`, finite for unseen terms and ~0
//! for ubiquitous ones. Terms are normalized at build and lookup.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::text::normalize;

#[derive(Debug, Clone, Default)]
pub struct IdfTable {
    n_docs: u32,
    df: HashMap<String, u32>,
}

impl IdfTable {
    /// Count document frequencies over tokenized documents.
    pub fn fit(docs: &[Vec<String>]) -> Self {
        let mut df: HashMap<String, u32> = HashMap::new();
        for doc in docs {
            let terms: HashSet<String> = doc.iter().map(|t| normalize(t)).collect();
            for term in terms {
                if !term.is_empty() {
                    *df.entry(term).or_insert(0) += 1;
                }
            }
        }
        IdfTable {
            n_docs: docs.len() as u32,
            df,
        }
    }

    pub fn df(&self, term: &str) -> u32 {
        self.df.get(&normalize(term)).copied().unwrap_or(0)
    }

    pub fn idf(&self, term: &str) -> f64 {
        ((self.n_docs as f64 + 1.0) / (self.df(term) as f64 + 1.0)).ln()
    }

    pub fn n_docs(&self) -> u32 {
        self.n_docs
    }

    /// Raw normalized-term → document-frequency map (the CRF DF column
    /// reads this).
    pub fn counts(&self) -> &HashMap<String, u32> {
        &self.df
    }

    pub(crate) fn to_stored(&self) -> StoredIdf {
        let mut df: Vec<(String, u32)> = self.df.iter().map(|(k, &v)| (k.clone(), v)).collect();
        df.sort();
        StoredIdf {
            n_docs: self.n_docs,
            df,
        }
    }

    pub(crate) fn from_stored(stored: StoredIdf) -> Self {
        IdfTable {
            n_docs: stored.n_docs,
            df: stored.df.into_iter().collect(),
        }
    }
}

/// Serialized form with a stable key order.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct StoredIdf {
    pub n_docs: u32,
    pub df: Vec<(String, u32)>,
}
