// SPDX-License-Identifier: MIT OR Apache-2.0

//! Object lexicon and caption scanning.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::EvalError;

/// MSCOCO's 80 categories with common synonyms, as `canonical -> [synonym]`.
pub const DEFAULT_VOCAB_JSON: &str = include_str!("../../data/coco80_vocab.json");

const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("people", "person"),
    ("men", "man"),
    ("women", "woman"),
    ("children", "child"),
    ("mice", "mouse"),
    ("geese", "goose"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("knives", "knife"),
    ("leaves", "leaf"),
    ("wolves", "wolf"),
    ("shelves", "shelf"),
    ("calves", "calf"),
    ("oxen", "ox"),
];

/// Phrases are matched case-insensitively on word boundaries, longest
/// first, with the last word of a phrase allowed to be plural.
#[derive(Debug, Clone)]
pub struct ObjectVocabulary {
    phrases: HashMap<Vec<String>, String>,
    canonical: BTreeSet<String>,
    max_words: usize,
}

impl ObjectVocabulary {
    pub fn from_json(json: &str) -> Result<Self, EvalError> {
        let map: BTreeMap<String, Vec<String>> = serde_json::from_str(json)?;
        Self::from_map(&map)
    }

    pub fn coco80() -> Self {
        Self::from_json(DEFAULT_VOCAB_JSON).expect("bundled vocabulary is valid")
    }

    /// Each canonical name also matches itself, with `_` read as a space.
    pub fn from_map(map: &BTreeMap<String, Vec<String>>) -> Result<Self, EvalError> {
        if map.is_empty() {
            return Err(EvalError::Vocab("no objects".into()));
        }
        let mut phrases: HashMap<Vec<String>, String> = HashMap::new();
        for (canon, synonyms) in map {
            let own = canon.replace('_', " ");
            for s in std::iter::once(&own).chain(synonyms) {
                let words = words(s);
                if words.is_empty() {
                    return Err(EvalError::Vocab(format!("empty phrase under {canon:?}")));
                }
                if let Some(prev) = phrases.get(&words) {
                    if prev != canon {
                        return Err(EvalError::Conflict {
                            synonym: s.clone(),
                            first: prev.clone(),
                            second: canon.clone(),
                        });
                    }
                }
                phrases.insert(words, canon.clone());
            }
        }
        let max_words = phrases.keys().map(Vec::len).max().unwrap_or(1);
        Ok(Self {
            phrases,
            canonical: map.keys().cloned().collect(),
            max_words,
        })
    }

    pub fn canonical_names(&self) -> &BTreeSet<String> {
        &self.canonical
    }

    pub fn contains(&self, canonical: &str) -> bool {
        self.canonical.contains(canonical)
    }

    /// Resolves a canonical name or synonym (singular or plural).
    pub fn canonicalize(&self, name: &str) -> Option<&str> {
        if let Some(c) = self.canonical.get(name) {
            return Some(c);
        }
        let w = words(name);
        if w.is_empty() {
            return None;
        }
        self.lookup(&w).map(String::as_str)
    }

    fn lookup(&self, phrase: &[String]) -> Option<&String> {
        let (last, head) = phrase.split_last()?;
        let mut key = head.to_vec();
        for form in singular_forms(last) {
            key.push(form);
            if let Some(c) = self.phrases.get(&key) {
                return Some(c);
            }
            key.pop();
        }
        None
    }

    /// Canonical objects mentioned in `caption`.
    pub fn extract_objects(&self, caption: &str) -> BTreeSet<String> {
        let mut found = BTreeSet::new();
        for chunk in chunks(caption) {
            let mut i = 0;
            while i < chunk.len() {
                let longest = self.max_words.min(chunk.len() - i);
                let hit = (1..=longest)
                    .rev()
                    .find_map(|len| self.lookup(&chunk[i..i + len]).map(|c| (len, c)));
                match hit {
                    Some((len, c)) => {
                        found.insert(c.clone());
                        i += len;
                    }
                    None => i += 1,
                }
            }
        }
        found
    }
}

/// The word itself first, then candidate singulars.
fn singular_forms(word: &str) -> Vec<String> {
    let mut out = vec![word.to_string()];
    if let Some(&(_, s)) = IRREGULAR_PLURALS.iter().find(|(p, _)| *p == word) {
        out.push(s.to_string());
    }
    if let Some(stem) = word.strip_suffix("ies") {
        out.push(format!("{stem}y"));
    }
    if let Some(stem) = word.strip_suffix("es") {
        out.push(stem.to_string());
    }
    if let Some(stem) = word.strip_suffix('s') {
        out.push(stem.to_string());
    }
    out.retain(|w| !w.is_empty());
    out
}

/// Lowercase alphanumeric words; apostrophes are dropped inside words.
fn words(text: &str) -> Vec<String> {
    chunks(text).into_iter().flatten().collect()
}

/// Word runs separated by punctuation; phrases never span a chunk boundary.
fn chunks(text: &str) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            word.extend(ch.to_lowercase());
        } else if ch == '\'' || ch == '\u{2019}' {
            continue;
        } else {
            if !word.is_empty() {
                out.last_mut().expect("non-empty").push(std::mem::take(&mut word));
            }
            if !ch.is_whitespace() && !ch.is_control() && ch != '-' {
                out.push(Vec::new());
            }
        }
    }
    if !word.is_empty() {
        out.last_mut().expect("non-empty").push(word);
    }
    out.retain(|c| !c.is_empty());
    out
}
