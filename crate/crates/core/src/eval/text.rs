//! Text normalization and longest-match surface lookup shared by the
//! polarity parser and the object extractor.

use std::collections::HashMap;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// NFC, lowercase, and every character that is not a letter, digit or
/// combining mark replaced by a space.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.nfc() {
        if c.is_alphanumeric() || is_combining_mark(c) {
            out.extend(c.to_lowercase());
        } else {
            out.push(' ');
        }
    }
    out
}

/// Surface forms mapped to values, matched greedily left to right with the
/// longest form winning. Word mode matches whole word sequences; character
/// mode matches substrings and is used for scripts without word spacing.
#[derive(Debug, Clone)]
pub struct SurfaceMatcher<V> {
    words: bool,
    forms: HashMap<Vec<String>, V>,
    max_len: usize,
}

impl<V: Clone> SurfaceMatcher<V> {
    pub fn new<'a>(entries: impl IntoIterator<Item = (&'a str, V)>, words: bool) -> Self {
        let mut forms = HashMap::new();
        let mut max_len = 0;
        for (surface, value) in entries {
            let key = units(&normalize(surface), words);
            if key.is_empty() {
                continue;
            }
            max_len = max_len.max(key.len());
            forms.insert(key, value);
        }
        SurfaceMatcher { words, forms, max_len }
    }

    /// Values of every non-overlapping match, in text order.
    pub fn find_all(&self, text: &str) -> Vec<V> {
        let seq = units(&normalize(text), self.words);
        let mut found = Vec::new();
        let mut i = 0;
        while i < seq.len() {
            let longest = (1..=self.max_len.min(seq.len() - i))
                .rev()
                .find_map(|len| self.forms.get(&seq[i..i + len]).map(|v| (len, v)));
            match longest {
                Some((len, v)) => {
                    found.push(v.clone());
                    i += len;
                }
                None => i += 1,
            }
        }
        found
    }
}

fn units(normalized: &str, words: bool) -> Vec<String> {
    if words {
        normalized.split_whitespace().map(str::to_string).collect()
    } else {
        normalized
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect()
    }
}
