//! Embedded word list: surface form, lemma and part of speech.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::tagger::Pos;

const LEXICON_TSV: &str = include_str!("../../data/lexicon.tsv");

#[derive(Clone, Debug)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<(String, Pos)>>,
}

impl Lexicon {
    pub fn embedded() -> Self {
        Self::from_tsv(LEXICON_TSV)
    }

    pub fn from_tsv(text: &str) -> Self {
        let mut entries: BTreeMap<String, Vec<(String, Pos)>> = BTreeMap::new();
        for line in text.lines() {
            let mut cols = line.split('\t');
            let (Some(surface), Some(lemma), Some(pos)) = (cols.next(), cols.next(), cols.next()) else {
                continue;
            };
            let Some(pos) = Pos::from_tag(pos.trim()) else {
                continue;
            };
            entries.entry(surface.to_string()).or_default().push((lemma.to_string(), pos));
        }
        Lexicon { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Readings of a lowercase surface form, most preferred first.
    pub fn lookup(&self, surface: &str) -> &[(String, Pos)] {
        self.entries.get(surface).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn lemma_as(&self, surface: &str, pos: Pos) -> Option<&str> {
        self.lookup(surface).iter().find(|(_, p)| *p == pos).map(|(l, _)| l.as_str())
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    /// Lemma without part-of-speech context. Lookups and suffix rules are
    /// applied until nothing changes, so the result is a fixed point.
    pub fn lemmatize(&self, token: &str) -> String {
        let mut w = token.to_lowercase();
        for _ in 0..16 {
            let next = match self.lookup(&w).first() {
                Some((l, _)) => l.clone(),
                None => match strip_suffix(&w, None) {
                    Some(s) => s,
                    None => return w,
                },
            };
            if next == w {
                return w;
            }
            w = next;
        }
        w
    }

    /// Lemma for a known part of speech; unknown words fall back to suffix rules.
    pub fn lemmatize_as(&self, token: &str, pos: Pos) -> String {
        let lower = token.to_lowercase();
        if let Some(l) = self.lemma_as(&lower, pos) {
            return l.to_string();
        }
        match pos {
            Pos::N | Pos::V => {
                let mut w = lower;
                while let Some(s) = strip_suffix(&w, Some(pos)) {
                    w = s;
                }
                w
            }
            _ => lower,
        }
    }
}

fn has_vowel(s: &str) -> bool {
    s.chars().any(|c| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y'))
}

/// One step of inflection stripping for words outside the lexicon.
fn strip_suffix(w: &str, pos: Option<Pos>) -> Option<String> {
    if !w.chars().all(|c| c.is_ascii_lowercase() || c == '-') {
        return None;
    }
    let verbish = pos != Some(Pos::N);
    let n = w.len();
    {
        if n > 4 && w.ends_with("ies") {
            return Some(alloc::format!("{}y", &w[..n - 3]));
        }
        if n > 4 && (w.ends_with("sses") || w.ends_with("ches") || w.ends_with("shes") || w.ends_with("xes") || w.ends_with("zes")) {
            return Some(w[..n - 2].to_string());
        }
        if n > 3 && w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") {
            return Some(w[..n - 1].to_string());
        }
    }
    if verbish {
        if n > 5 && w.ends_with("ied") {
            return Some(alloc::format!("{}y", &w[..n - 3]));
        }
        for suf in ["ing", "ed"] {
            if let Some(stem) = w.strip_suffix(suf) {
                let min = if suf == "ing" { 3 } else { 4 };
                if stem.len() >= min && has_vowel(stem) {
                    let b = stem.as_bytes();
                    let l = b.len();
                    if l >= 2 && b[l - 1] == b[l - 2] && !matches!(b[l - 1], b'l' | b's' | b'z' | b'e' | b'o') {
                        return Some(stem[..l - 1].to_string());
                    }
                    return Some(stem.to_string());
                }
            }
        }
    }
    None
}
