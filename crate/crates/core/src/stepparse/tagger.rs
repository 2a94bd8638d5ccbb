//! Tokenizer and rule-based part-of-speech tagger.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::lexicon::Lexicon;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pos {
    N,
    V,
    Adj,
    Adv,
    Det,
    Num,
    Keyword,
    StepRef,
    Punct,
    Other,
    Aux,
    Pron,
    Prep,
    Part,
    Conj,
}

impl Pos {
    pub fn tag(self) -> &'static str {
        match self {
            Pos::N => "N",
            Pos::V => "V",
            Pos::Adj => "ADJ",
            Pos::Adv => "ADV",
            Pos::Det => "DET",
            Pos::Num => "NUM",
            Pos::Keyword => "KEYWORD",
            Pos::StepRef => "STEPREF",
            Pos::Punct => "PUNCT",
            Pos::Other => "OTHER",
            Pos::Aux => "AUX",
            Pos::Pron => "PRON",
            Pos::Prep => "PREP",
            Pos::Part => "PART",
            Pos::Conj => "CONJ",
        }
    }

    pub fn from_tag(t: &str) -> Option<Pos> {
        Some(match t {
            "N" => Pos::N,
            "V" => Pos::V,
            "ADJ" => Pos::Adj,
            "ADV" => Pos::Adv,
            "DET" => Pos::Det,
            "NUM" => Pos::Num,
            "KEYWORD" => Pos::Keyword,
            "STEPREF" => Pos::StepRef,
            "PUNCT" => Pos::Punct,
            "OTHER" => Pos::Other,
            "AUX" => Pos::Aux,
            "PRON" => Pos::Pron,
            "PREP" => Pos::Prep,
            "PART" => Pos::Part,
            "CONJ" => Pos::Conj,
            _ => return None,
        })
    }

    fn nominal(self) -> bool {
        matches!(self, Pos::N | Pos::Adj | Pos::Num)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub lemma: String,
    pub pos: Pos,
    /// Byte offsets into the tagged text.
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn lower(&self) -> String {
        self.text.to_lowercase()
    }

    pub fn is(&self, pos: Pos, lemma: &str) -> bool {
        self.pos == pos && self.lemma == lemma
    }
}

#[derive(Clone, Debug)]
struct Raw {
    text: String,
    start: usize,
    end: usize,
    stepref: Option<String>,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn tokenize(text: &str) -> Vec<Raw> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let end_of = |i: usize| if i < chars.len() { chars[i].0 } else { text.len() };
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '[' {
            // Step reference: [3] or [2.1]
            let mut j = i + 1;
            let mut body = String::new();
            while j < chars.len() && (chars[j].1.is_ascii_digit() || chars[j].1 == '.') {
                body.push(chars[j].1);
                j += 1;
            }
            let well_formed = !body.is_empty()
                && !body.starts_with('.')
                && !body.ends_with('.')
                && !body.contains("..");
            if well_formed && j < chars.len() && chars[j].1 == ']' {
                out.push(Raw { text: text[pos..end_of(j + 1)].to_string(), start: pos, end: end_of(j + 1), stepref: Some(body) });
                i = j + 1;
                continue;
            }
        }
        if is_word_char(c) {
            let mut j = i;
            while j < chars.len() {
                let d = chars[j].1;
                if is_word_char(d) || (d == '-' && j + 1 < chars.len() && is_word_char(chars[j + 1].1) && j > i) {
                    j += 1;
                } else {
                    break;
                }
            }
            // Contraction: "don't" splits as "do" + "n't".
            let apostrophe = j < chars.len() && matches!(chars[j].1, '\'' | '’');
            if apostrophe && j + 1 < chars.len() && chars[j + 1].1 == 't' && j - i >= 2 && chars[j - 1].1 == 'n' {
                let split = j - 1;
                out.push(Raw { text: text[pos..chars[split].0].to_string(), start: pos, end: chars[split].0, stepref: None });
                out.push(Raw { text: text[chars[split].0..end_of(j + 2)].to_string(), start: chars[split].0, end: end_of(j + 2), stepref: None });
                i = j + 2;
                continue;
            }
            out.push(Raw { text: text[pos..end_of(j)].to_string(), start: pos, end: end_of(j), stepref: None });
            i = j;
            continue;
        }
        if matches!(c, '\'' | '’') && i + 1 < chars.len() && matches!(chars[i + 1].1, 's' | 'S') && (i + 2 >= chars.len() || !is_word_char(chars[i + 2].1)) {
            out.push(Raw { text: text[pos..end_of(i + 2)].to_string(), start: pos, end: end_of(i + 2), stepref: None });
            i += 2;
            continue;
        }
        out.push(Raw { text: text[pos..end_of(i + 1)].to_string(), start: pos, end: end_of(i + 1), stepref: None });
        i += 1;
    }
    out
}

fn guess(lower: &str) -> Vec<Pos> {
    if lower.chars().all(|c| c.is_ascii_digit()) {
        return alloc::vec![Pos::Num];
    }
    if !lower.chars().any(|c| c.is_alphanumeric()) {
        return alloc::vec![Pos::Punct];
    }
    if lower.ends_with("ly") {
        return alloc::vec![Pos::Adv];
    }
    if lower.ends_with("ing") || lower.ends_with("ed") {
        return alloc::vec![Pos::V, Pos::Adj, Pos::N];
    }
    for s in ["tion", "sion", "ment", "ness", "ity", "ance", "ence", "ship"] {
        if lower.ends_with(s) {
            return alloc::vec![Pos::N];
        }
    }
    for s in ["ous", "ful", "ive", "able", "ible", "less"] {
        if lower.ends_with(s) {
            return alloc::vec![Pos::Adj];
        }
    }
    alloc::vec![Pos::N, Pos::V]
}

const PARTICLES: [&str; 8] = ["off", "on", "in", "up", "down", "out", "over", "away"];

pub struct Tagger {
    lex: Lexicon,
}

impl Default for Tagger {
    fn default() -> Self {
        Self::new()
    }
}

impl Tagger {
    pub fn new() -> Self {
        Tagger { lex: Lexicon::embedded() }
    }

    pub fn with_lexicon(lex: Lexicon) -> Self {
        Tagger { lex }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lex
    }

    fn candidates(&self, raw: &Raw) -> Vec<Pos> {
        if raw.stepref.is_some() {
            return alloc::vec![Pos::StepRef];
        }
        let lower = raw.text.to_lowercase();
        let mut c: Vec<Pos> = Vec::new();
        for (_, p) in self.lex.lookup(&lower) {
            if !c.contains(p) {
                c.push(*p);
            }
        }
        if c.is_empty() {
            c = guess(&lower);
        }
        c
    }

    pub fn tag(&self, text: &str) -> Vec<Token> {
        let raws = tokenize(text);
        let cands: Vec<Vec<Pos>> = raws.iter().map(|r| self.candidates(r)).collect();
        let mut tags: Vec<Pos> = Vec::with_capacity(raws.len());
        for i in 0..raws.len() {
            let c = &cands[i];
            let lower = raws[i].text.to_lowercase();
            let pick = if c.len() == 1 {
                c[0]
            } else {
                self.resolve(i, c, &lower, &tags, &raws, &cands)
            };
            tags.push(pick);
        }
        // Verb particles: "turn off the router".
        for i in 1..raws.len() {
            let lower = raws[i].text.to_lowercase();
            if tags[i] == Pos::Prep && tags[i - 1] == Pos::V && PARTICLES.contains(&lower.as_str()) {
                let next_ok = match tags.get(i + 1) {
                    None => true,
                    Some(p) => matches!(p, Pos::Det | Pos::N | Pos::Adj | Pos::Num | Pos::Punct),
                };
                if next_ok {
                    tags[i] = Pos::Part;
                }
            }
        }
        raws.into_iter()
            .zip(tags)
            .map(|(r, pos)| {
                let lemma = match (&r.stepref, pos) {
                    (Some(body), _) => body.clone(),
                    (None, Pos::Punct) => r.text.clone(),
                    (None, p) => self.lex.lemmatize_as(&r.text, p),
                };
                Token { text: r.text, lemma, pos, start: r.start, end: r.end }
            })
            .collect()
    }

    fn clause_start(i: usize, tags: &[Pos]) -> bool {
        let mut k = i;
        loop {
            if k == 0 {
                return true;
            }
            match tags[k - 1] {
                Pos::Punct => return true,
                Pos::Adv => k -= 1,
                _ => return false,
            }
        }
    }

    fn resolve(&self, i: usize, c: &[Pos], lower: &str, tags: &[Pos], raws: &[Raw], cands: &[Vec<Pos>]) -> Pos {
        let has = |p: Pos| c.contains(&p);
        let next_nominal = cands.get(i + 1).map(|n| n.iter().any(|p| matches!(p, Pos::N | Pos::Adj | Pos::Num))).unwrap_or(false);
        let prev = if i > 0 { Some(tags[i - 1]) } else { None };
        let prev_lower = if i > 0 { raws[i - 1].text.to_lowercase() } else { String::new() };

        if Self::clause_start(i, tags) && has(Pos::V) {
            return Pos::V;
        }
        match prev {
            Some(Pos::Det) | Some(Pos::Adj) | Some(Pos::Num) | Some(Pos::N) => {
                if has(Pos::Adj) && next_nominal && !lower.ends_with("ing") {
                    return Pos::Adj;
                }
                if has(Pos::N) {
                    return Pos::N;
                }
                if has(Pos::Adj) {
                    return Pos::Adj;
                }
            }
            Some(Pos::Aux) | Some(Pos::Pron) => {
                if has(Pos::V) {
                    return Pos::V;
                }
            }
            Some(Pos::Keyword) if prev_lower == "not" || prev_lower == "n't" => {
                if has(Pos::V) {
                    return Pos::V;
                }
            }
            Some(Pos::Prep) => {
                if prev_lower == "to" && has(Pos::V) {
                    return Pos::V;
                }
                if lower.ends_with("ing") && has(Pos::V) {
                    return Pos::V;
                }
                if has(Pos::N) {
                    return Pos::N;
                }
            }
            Some(Pos::V) | Some(Pos::Part) => {
                if has(Pos::Adj) {
                    return Pos::Adj;
                }
                if has(Pos::N) {
                    return Pos::N;
                }
            }
            _ => {}
        }
        if prev.map(|p| p.nominal()).unwrap_or(false) && has(Pos::N) {
            return Pos::N;
        }
        c[0]
    }
}

/// Tag a text with the embedded lexicon.
pub fn tag(text: &str) -> Vec<Token> {
    Tagger::new().tag(text)
}

pub fn tag_string(tokens: &[Token]) -> String {
    let parts: Vec<String> = tokens.iter().map(|t| alloc::format!("{}/{}", t.text, t.pos.tag())).collect();
    parts.join(" ")
}
