//! Word-embedding table and cosine similarity.
//!
//! File format: UTF-8 text, first line `vocab_size dim`, then one
//! `token v1 .. vd` line per word. Keys are normalized at load and at
//! lookup.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::text::normalize;

#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn load(path: &Path) -> Result<Self> {
        let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = data.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: 1,
            msg: "missing `vocab_size dim` header".into(),
        })?;
        let mut parts = header.split_whitespace();
        let _vocab: usize = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| header_error(path, header))?;
        let dim: usize = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| header_error(path, header))?;
        if dim == 0 {
            return Err(header_error(path, header));
        }

        let mut vectors = HashMap::new();
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let token = cols.next().unwrap_or_default();
            let values: Vec<f64> = cols.map(|v| v.parse().unwrap_or(f64::NAN)).collect();
            if values.len() != dim || values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("expected {dim} finite values for token {token:?}"),
                });
            }
            vectors.insert(normalize(token), values);
        }
        Ok(EmbeddingTable { dim, vectors })
    }

    pub fn from_vectors(dim: usize, entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut vectors = HashMap::new();
        for (token, values) in entries {
            if values.len() != dim || values.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "embedding for {token:?} must have {dim} finite values"
                )));
            }
            vectors.insert(normalize(&token), values);
        }
        Ok(EmbeddingTable { dim, vectors })
    }

    pub fn get(&self, term: &str) -> Option<&[f64]> {
        self.vectors.get(&normalize(term)).map(Vec::as_slice)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

fn header_error(path: &Path, header: &str) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line: 1,
        msg: format!("bad `vocab_size dim` header: {header:?}"),
    }
}

/// `u·v / (‖u‖‖v‖)`, or 0 when either norm is 0.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!(
            "cosine: dimension mismatch {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (nu * nv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn cosine_basics() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let got = cosine(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((got - 0.974_631_846).abs() < 1e-9);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!(cosine(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn load_and_lookup() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "2 3\nhello 1 0 0\n世界 0 0.5 0.5\n").unwrap();
        let table = EmbeddingTable::load(f.path()).unwrap();
        assert_eq!(table.dim(), 3);
        assert_eq!(table.get("Hello"), Some(&[1.0, 0.0, 0.0][..]));
        assert_eq!(table.get("世界"), Some(&[0.0, 0.5, 0.5][..]));
        assert!(table.get("missing").is_none());
    }

    #[test]
    fn bad_rows_are_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "1 3\nhello 1 0\n").unwrap();
        assert!(EmbeddingTable::load(f.path()).is_err());

        let mut g = tempfile::NamedTempFile::new().unwrap();
        write!(g, "1 2\nhello 1 nan\n").unwrap();
        assert!(EmbeddingTable::load(g.path()).is_err());
    }

    proptest::proptest! {
        #[test]
        fn cosine_is_symmetric_and_bounded(
            u in proptest::collection::vec(-10.0f64..10.0, 4),
            v in proptest::collection::vec(-10.0f64..10.0, 4),
        ) {
            let a = cosine(&u, &v).unwrap();
            let b = cosine(&v, &u).unwrap();
            proptest::prop_assert_eq!(a, b);
            proptest::prop_assert!(a.abs() <= 1.0 + 1e-12);
        }
    }
}
