//! BIOES span codec. Encoding is strict (overlaps are an error); decoding
//! is lenient and silently drops ill-formed fragments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sequence labels, in the fixed order the tie-breaking rules depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    B = 0,
    I = 1,
    O = 2,
    E = 3,
    S = 4,
}

pub const LABELS: [Label; 5] = [Label::B, Label::I, Label::O, Label::E, Label::S];
pub const NUM_LABELS: usize = 5;

impl Label {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        LABELS.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::B => "B",
            Label::I => "I",
            Label::O => "O",
            Label::E => "E",
            Label::S => "S",
        }
    }
}

/// Encode non-overlapping spans over a sequence of `len` positions:
/// single-position spans become `S`, longer ones `B I* E`, everything
/// else `O`.
pub fn bioes_encode(len: usize, spans: &[(usize, usize)]) -> Result<Vec<Label>> {
    let mut sorted: Vec<(usize, usize)> = spans.to_vec();
    sorted.sort_unstable();
    let mut prev_end = 0;
    for &(start, end) in &sorted {
        if start >= end || end > len {
            return Err(Error::invalid(format!(
                "span [{start},{end}) out of bounds for length {len}"
            )));
        }
        if start < prev_end {
            return Err(Error::invalid(format!(
                "overlapping mention spans at [{start},{end})"
            )));
        }
        prev_end = end;
    }
    let mut labels = vec![Label::O; len];
    for &(start, end) in &sorted {
        if end - start == 1 {
            labels[start] = Label::S;
        } else {
            labels[start] = Label::B;
            for l in labels.iter_mut().take(end - 1).skip(start + 1) {
                *l = Label::I;
            }
            labels[end - 1] = Label::E;
        }
    }
    Ok(labels)
}

/// Decode spans leniently: maximal well-formed `B I* E` runs and `S`
/// positions become spans, ill-formed fragments (`I` without `B`, `B`
/// without a closing `E`, bare `E`) are dropped.
pub fn bioes_decode(labels: &[Label]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        match labels[i] {
            Label::S => {
                spans.push((i, i + 1));
                i += 1;
            }
            Label::B => {
                let mut j = i + 1;
                while j < labels.len() && labels[j] == Label::I {
                    j += 1;
                }
                if j < labels.len() && labels[j] == Label::E {
                    spans.push((i, j + 1));
                    i = j + 1;
                } else {
                    // Ill-formed B I* fragment; re-examine the breaking label.
                    i = j;
                }
            }
            _ => i += 1,
        }
    }
    spans
}
