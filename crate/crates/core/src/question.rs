//! Question records and the gold-annotation JSONL format.
//!
//! Schema, one object per line:
//! `{"id": str, "text": str, "entities": [{"start": int, "end": int,
//! "mention": str, "kb_id": str}]}` with offsets in Unicode scalar values,
//! end exclusive.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{char_len, char_slice};

/// A gold mention span linked to a KG entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldMention {
    pub start: usize,
    pub end: usize,
    pub mention: String,
    pub kb_id: String,
}

/// Raw question text with optional gold annotations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub entities: Vec<GoldMention>,
}

impl Question {
    /// Check that every gold span is in bounds and its mention string is
    /// the exact text slice.
    pub fn validate(&self) -> Result<()> {
        let len = char_len(&self.text);
        for g in &self.entities {
            if g.start >= g.end || g.end > len {
                return Err(Error::invalid(format!(
                    "question {:?}: span [{},{}) out of bounds for text of length {}",
                    self.id, g.start, g.end, len
                )));
            }
            let slice = char_slice(&self.text, g.start, g.end).unwrap_or_default();
            if slice != g.mention {
                return Err(Error::invalid(format!(
                    "question {:?}: mention {:?} does not equal text slice {:?} at [{},{})",
                    self.id, g.mention, slice, g.start, g.end
                )));
            }
        }
        Ok(())
    }
}

/// Load a questions JSONL file; gold spans are validated as they are read.
pub fn load_questions(path: &Path) -> Result<Vec<Question>> {
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in data.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let q: Question = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        q.validate().map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        out.push(q);
    }
    Ok(out)
}
