//! The single surface-normalization function shared by every index and
//! lookup, plus character-offset helpers.
//!
//! All spans in this crate are measured in Unicode scalar values, end
//! exclusive.

use unicode_normalization::UnicodeNormalization;

/// Canonical form used for every surface comparison: NFC, surrounding
/// whitespace trimmed, each remaining run of whitespace or punctuation
/// replaced by a single `_`, letters lowercased.
///
/// Idempotent: `normalize(normalize(s)) == normalize(s)`.
pub fn normalize(s: &str) -> String {
    let composed: String = s.nfc().collect();
    let trimmed = composed.trim();
    let mut out = String::with_capacity(trimmed.len());
    let mut in_run = false;
    for c in trimmed.chars() {
        if c.is_whitespace() || is_punctuation(c) {
            if !in_run {
                out.push('_');
                in_run = true;
            }
        } else {
            in_run = false;
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// ASCII punctuation plus the common general/CJK/fullwidth punctuation
/// blocks. `_` itself is punctuation, which is what makes [`normalize`]
/// idempotent.
fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{00B7}'                  // middle dot
            | '\u{2000}'..='\u{206F}'   // general punctuation
            | '\u{3000}'..='\u{303F}'   // CJK symbols and punctuation
            | '\u{FF01}'..='\u{FF0F}'   // fullwidth ! .. /
            | '\u{FF1A}'..='\u{FF20}'   // fullwidth : .. @
            | '\u{FF3B}'..='\u{FF40}'   // fullwidth [ .. `
            | '\u{FF5B}'..='\u{FF65}')  // fullwidth { .. halfwidth 。
}

/// Number of Unicode scalar values in `s`.
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Slice `s` by character offsets, or `None` when out of bounds.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = s.char_indices().map(|(i, _)| i).chain(Some(s.len()));
    let byte_start = indices.by_ref().nth(start)?;
    if end == start {
        return Some(&s[byte_start..byte_start]);
    }
    let byte_end = indices.nth(end - start - 1)?;
    Some(&s[byte_start..byte_end])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn trims_and_collapses() {
        assert_eq!(normalize("  方便面 "), "方便面");
        assert_eq!(normalize("a  b"), "a_b");
        assert_eq!(normalize("孕妇，吃！"), "孕妇_吃_");
        assert_eq!(normalize("A—B"), "a_b");
        assert_eq!(normalize("？"), "_");
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("   "), "");
    }

    #[test]
    fn lowercases_latin() {
        assert_eq!(normalize("New York"), "new_york");
    }

    #[test]
    fn char_slice_is_scalar_based() {
        assert_eq!(char_slice("孕妇吃方便面好吗", 3, 6), Some("方便面"));
        assert_eq!(char_slice("abc", 0, 3), Some("abc"));
        assert_eq!(char_slice("abc", 2, 2), Some(""));
        assert_eq!(char_slice("abc", 1, 4), None);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,40}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn char_slice_roundtrip(s in "\\PC{0,20}") {
            let n = char_len(&s);
            prop_assert_eq!(char_slice(&s, 0, n), Some(s.as_str()));
        }
    }
}
