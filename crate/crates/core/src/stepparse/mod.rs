//! Parsing one instruction step into condition and action phrases and a
//! transition rule.

pub mod lexicon;
pub mod tagger;

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::controller::ActionSet;
use crate::formula::CondFormula;

pub use lexicon::Lexicon;
pub use tagger::{tag, Pos, Tagger, Token};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    Default,
    Direct,
    Conditional,
    ConditionalElse,
    SelfWait,
    SelfUntil,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Keyword {
    If,
    Wait,
    Until,
    After,
    And,
    Or,
    No,
    Not,
    StepRef,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhraseKind {
    Cond,
    Act,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbPhrase {
    pub lemmas: Vec<String>,
    pub kind: PhraseKind,
    pub negated: bool,
}

impl VerbPhrase {
    /// Proposition id: lemmas joined by single spaces.
    pub fn id(&self) -> String {
        self.lemmas.join(" ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("step {step}: no action phrase and no keyword in {text:?}")]
    NoVerbFound { step: String, text: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedStep {
    pub step_number: String,
    pub text: String,
    pub rule: Rule,
    /// If-guard for conditional and direct steps, waited-for condition for
    /// wait/until steps, `True` otherwise.
    pub conds: CondFormula,
    pub acts: ActionSet,
    pub keywords: Vec<Keyword>,
    pub direct_target: Option<String>,
    /// A wait nested in a conditional branch: "if C, wait for H before A".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hold: Option<CondFormula>,
    /// Second if-sentence of the same step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub else_branch: Option<Box<ParsedStep>>,
    pub phrases: Vec<VerbPhrase>,
    /// Recorded ambiguities; the first matching keyword decided the rule.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub issues: Vec<String>,
}

impl ParsedStep {
    pub fn has_keyword(&self, k: Keyword) -> bool {
        self.keywords.contains(&k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum HoldKind {
    Wait,
    Until,
    After,
}

#[derive(Clone, Debug, Default)]
struct Clause {
    guard: Option<CondFormula>,
    hold: Option<(Option<CondFormula>, HoldKind)>,
    acts: Vec<Vec<String>>,
    target: Option<String>,
    phrases: Vec<VerbPhrase>,
    issues: Vec<String>,
    has_if: bool,
}

const LIGHT_VERBS: [&str; 7] = ["proceed", "go", "continue", "try", "begin", "start", "need"];
const PATH_PREPS: [&str; 7] = ["across", "through", "over", "into", "onto", "around", "along"];
const DEFINITE: [&str; 13] = ["the", "this", "that", "these", "those", "your", "my", "his", "her", "its", "their", "our", "'s"];
const AGENTS: [&str; 5] = ["you", "i", "we", "yourself", "me"];

fn is_kw(t: &Token, lemma: &str) -> bool {
    t.pos == Pos::Keyword && t.lemma == lemma
}

fn is_comma(t: &Token) -> bool {
    t.pos == Pos::Punct && t.text == ","
}

fn is_bracket(t: &Token) -> bool {
    t.pos == Pos::Punct && (t.text == "[" || t.text == "]")
}

pub struct StepParser {
    tagger: Tagger,
}

impl Default for StepParser {
    fn default() -> Self {
        Self::new()
    }
}

impl StepParser {
    pub fn new() -> Self {
        StepParser { tagger: Tagger::new() }
    }

    pub fn tagger(&self) -> &Tagger {
        &self.tagger
    }

    pub fn parse_step(&self, step_number: &str, text: &str) -> Result<ParsedStep, ParseError> {
        let all = self.tagger.tag(text);
        let tokens: Vec<Token> = all.iter().filter(|t| !is_bracket(t)).cloned().collect();
        let mut sentences: Vec<Vec<Token>> = Vec::new();
        let mut cur = Vec::new();
        for t in tokens {
            if t.pos == Pos::Punct && matches!(t.text.as_str(), "." | "!" | "?" | ";") {
                if !cur.is_empty() {
                    sentences.push(core::mem::take(&mut cur));
                }
            } else {
                cur.push(t);
            }
        }
        if !cur.is_empty() {
            sentences.push(cur);
        }
        let keywords = keywords_of(&all);
        let starts_with_if = |s: &Vec<Token>| s.first().map(|t| is_kw(t, "if")).unwrap_or(false);

        // Two if-sentences in one step: an if/else pair.
        if sentences.len() >= 2 && starts_with_if(&sentences[0]) && sentences[1..].iter().all(starts_with_if) {
            let mut branches: Vec<ParsedStep> = Vec::new();
            for s in &sentences {
                let clause = self.analyze(s, &all);
                branches.push(finish(step_number, text, clause, Vec::new()));
            }
            let mut rest = branches.split_off(1);
            let mut first = branches.pop().unwrap();
            let mut tail: Option<Box<ParsedStep>> = None;
            while let Some(mut b) = rest.pop() {
                b.else_branch = tail.take();
                b.rule = if b.direct_target.is_some() { Rule::Direct } else { Rule::Conditional };
                tail = Some(Box::new(b));
            }
            for b in iter_branches(tail.as_deref()) {
                first.phrases.extend(b.phrases.iter().cloned());
            }
            first.else_branch = tail;
            first.rule = Rule::ConditionalElse;
            first.keywords = keywords;
            return Ok(first);
        }

        let mut merged = Clause::default();
        let mut structured = false;
        for s in &sentences {
            let c = self.analyze(s, &all);
            let is_structured = c.guard.is_some() || c.hold.is_some() || c.target.is_some() || c.has_if;
            if is_structured && !structured {
                structured = true;
                let acts = core::mem::take(&mut merged.acts);
                let phrases = core::mem::take(&mut merged.phrases);
                let issues = core::mem::take(&mut merged.issues);
                merged = c;
                merged.acts.splice(0..0, acts);
                merged.phrases.splice(0..0, phrases);
                merged.issues.splice(0..0, issues);
            } else {
                merged.acts.extend(c.acts);
                merged.phrases.extend(c.phrases);
                merged.issues.extend(c.issues);
                if merged.target.is_none() {
                    merged.target = c.target;
                }
            }
        }
        if merged.acts.is_empty() && merged.target.is_none() && merged.hold.is_none() && merged.guard.is_none() {
            // Nominal step such as "Secret sharing of inputs": promote a gerund.
            if let Some(vp) = self.gerund_phrase(&all) {
                merged.phrases.push(VerbPhrase { lemmas: vp.clone(), kind: PhraseKind::Act, negated: false });
                merged.acts.push(vp);
            }
        }
        let has_structure_kw = keywords.iter().any(|k| matches!(k, Keyword::If | Keyword::Wait | Keyword::Until | Keyword::After | Keyword::StepRef));
        if merged.acts.is_empty() && !has_structure_kw {
            return Err(ParseError::NoVerbFound { step: step_number.to_string(), text: text.to_string() });
        }
        Ok(finish(step_number, text, merged, keywords))
    }

    fn gerund_phrase(&self, toks: &[Token]) -> Option<Vec<String>> {
        let lex = self.tagger.lexicon();
        let idx = toks.iter().position(|t| t.pos == Pos::N && t.text.to_lowercase().ends_with("ing") && lex.lemma_as(&t.text.to_lowercase(), Pos::V).is_some())?;
        let verb = lex.lemma_as(&toks[idx].text.to_lowercase(), Pos::V)?.to_string();
        let mut lemmas = alloc::vec![verb];
        let mut pre: Vec<String> = Vec::new();
        let mut k = idx;
        while k > 0 && matches!(toks[k - 1].pos, Pos::Adj | Pos::N | Pos::Num) {
            pre.insert(0, toks[k - 1].lemma.clone());
            k -= 1;
        }
        lemmas.extend(pre);
        Some(lemmas)
    }

    fn analyze(&self, toks: &[Token], all: &[Token]) -> Clause {
        let mut c = Clause::default();
        let structural: Vec<(usize, &str)> = toks
            .iter()
            .enumerate()
            .filter(|(_, t)| t.pos == Pos::Keyword && matches!(t.lemma.as_str(), "if" | "wait" | "until" | "after"))
            .map(|(i, t)| (i, t.lemma.as_str()))
            .collect();
        let holds: Vec<&str> = {
            let mut v: Vec<&str> = structural.iter().map(|(_, k)| *k).filter(|k| *k != "if").collect();
            v.dedup();
            v
        };
        let mut distinct = holds.clone();
        distinct.sort();
        distinct.dedup();
        if distinct.len() >= 2 {
            c.issues.push(alloc::format!("AmbiguousRule: keywords {:?} co-occur; '{}' applied", distinct, holds[0]));
        }
        c.target = toks.iter().find(|t| t.pos == Pos::StepRef).map(|t| t.lemma.clone());
        let Some(&(first_idx, first_kw)) = structural.first() else {
            let (acts, _) = self.action_phrases(toks, all, false);
            self.push_acts(&mut c, acts);
            return c;
        };
        let at_start = toks[..first_idx].iter().all(|t| t.pos == Pos::Punct);
        match first_kw {
            "if" => {
                c.has_if = true;
                let (mut cond, mut act): (Vec<Token>, Vec<Token>) = if at_start {
                    match toks.iter().skip(first_idx + 1).position(is_comma) {
                        Some(off) => {
                            let comma = first_idx + 1 + off;
                            (toks[first_idx + 1..comma].to_vec(), toks[comma + 1..].to_vec())
                        }
                        None => (toks[first_idx + 1..].to_vec(), Vec::new()),
                    }
                } else {
                    let end = toks.iter().skip(first_idx + 1).position(is_comma).map(|o| first_idx + 1 + o).unwrap_or(toks.len());
                    let mut act = toks[..first_idx].to_vec();
                    act.extend_from_slice(&toks[(end + 1).min(toks.len())..]);
                    (toks[first_idx + 1..end].to_vec(), act)
                };
                if cond.is_empty() {
                    // "if, car stay": leading noun phrase is the condition.
                    let v = act.iter().position(|t| t.pos == Pos::V || t.pos == Pos::Keyword).unwrap_or(act.len());
                    cond = act[..v].to_vec();
                    act = act[v..].to_vec();
                }
                let (g, ph) = self.cond_formula(&cond, all);
                c.guard = g;
                c.phrases.extend(ph);
                self.action_part(&mut c, &act, all);
            }
            "wait" => {
                let (pre, _) = self.action_phrases(&toks[..first_idx], all, false);
                self.push_acts(&mut c, pre);
                self.wait_clause(&mut c, &toks[first_idx + 1..], all);
            }
            "until" => {
                let (acts, _) = self.action_phrases(&toks[..first_idx], all, false);
                self.push_acts(&mut c, acts);
                let (g, ph) = self.cond_formula(&toks[first_idx + 1..], all);
                c.phrases.extend(ph);
                c.hold = Some((g, HoldKind::Until));
            }
            _ => {
                let (cond, act): (Vec<Token>, Vec<Token>) = if at_start {
                    match toks.iter().skip(first_idx + 1).position(is_comma) {
                        Some(off) => {
                            let comma = first_idx + 1 + off;
                            (toks[first_idx + 1..comma].to_vec(), toks[comma + 1..].to_vec())
                        }
                        None => (toks[first_idx + 1..].to_vec(), Vec::new()),
                    }
                } else {
                    (toks[first_idx + 1..].to_vec(), toks[..first_idx].to_vec())
                };
                let (g, ph) = self.cond_formula(&cond, all);
                c.phrases.extend(ph);
                c.hold = Some((g, HoldKind::After));
                let (acts, _) = self.action_phrases(&act, all, false);
                self.push_acts(&mut c, acts);
            }
        }
        c
    }

    /// Action side of a conditional: may itself contain a wait or until.
    fn action_part(&self, c: &mut Clause, act: &[Token], all: &[Token]) {
        if let Some(w) = act.iter().position(|t| is_kw(t, "wait")) {
            let (pre, _) = self.action_phrases(&act[..w], all, false);
            self.push_acts(c, pre);
            self.wait_clause(c, &act[w + 1..], all);
        } else if let Some(u) = act.iter().position(|t| is_kw(t, "until")) {
            let (acts, _) = self.action_phrases(&act[..u], all, false);
            self.push_acts(c, acts);
            let (g, ph) = self.cond_formula(&act[u + 1..], all);
            c.phrases.extend(ph);
            c.hold = Some((g, HoldKind::Until));
        } else {
            let (acts, _) = self.action_phrases(act, all, false);
            self.push_acts(c, acts);
        }
    }

    /// "wait [for] COND [before ACT]" and "wait COND ACT".
    fn wait_clause(&self, c: &mut Clause, span: &[Token], all: &[Token]) {
        let mut span = span;
        if span.first().map(|t| t.pos == Pos::Prep && t.lemma == "for").unwrap_or(false) {
            span = &span[1..];
        }
        let end = match span.iter().position(|t| t.pos == Pos::V) {
            Some(v) => gather_vp(span, v).1,
            None => span
                .iter()
                .position(|t| !matches!(t.pos, Pos::N | Pos::Adj | Pos::Num | Pos::Det | Pos::Pron) && !is_kw(t, "no") && !is_kw(t, "not"))
                .unwrap_or(span.len()),
        };
        let (g, ph) = self.cond_formula(&span[..end], all);
        c.phrases.extend(ph);
        c.hold = Some((g, HoldKind::Wait));
        let rest = &span[end..];
        let rest = if rest.first().map(is_comma).unwrap_or(false) { &rest[1..] } else { rest };
        let (main, before) = self.action_phrases(rest, all, true);
        self.push_acts(c, main);
        self.push_acts(c, before);
    }

    fn push_acts(&self, c: &mut Clause, acts: Vec<Vec<String>>) {
        for a in acts {
            c.phrases.push(VerbPhrase { lemmas: a.clone(), kind: PhraseKind::Act, negated: false });
            if !c.acts.contains(&a) {
                c.acts.push(a);
            }
        }
    }

    /// Verb phrases of an action span. Returns (main, before-clause) phrases.
    fn action_phrases(&self, toks: &[Token], _all: &[Token], _in_wait: bool) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
        let mut main = Vec::new();
        let mut before = Vec::new();
        let mut light_pending = false;
        let mut i = 0;
        while i < toks.len() {
            let t = &toks[i];
            match t.pos {
                Pos::Pron if AGENTS.contains(&t.lemma.as_str()) || matches!(t.lemma.as_str(), "that" | "which" | "who") => {
                    // Relative or agent clause: skip to the next comma.
                    while i < toks.len() && !is_comma(&toks[i]) {
                        i += 1;
                    }
                }
                Pos::Prep if t.lemma == "before" => {
                    if let Some(v) = toks[i + 1..].iter().position(|x| x.pos == Pos::V).map(|o| i + 1 + o) {
                        let (vp, end) = gather_vp(toks, v);
                        before.push(vp);
                        i = end;
                    } else {
                        i += 1;
                    }
                }
                Pos::Prep if t.lemma == "to" && toks.get(i + 1).map(|x| x.pos == Pos::V).unwrap_or(false) => {
                    if light_pending || main.is_empty() {
                        light_pending = false;
                        i += 1;
                    } else {
                        // Purpose clause: "... to make sure ...".
                        while i < toks.len() && !is_comma(&toks[i]) {
                            i += 1;
                        }
                    }
                }
                Pos::V => {
                    let next_is_to_verb = toks.get(i + 1).map(|x| x.pos == Pos::Prep && x.lemma == "to").unwrap_or(false)
                        && toks.get(i + 2).map(|x| x.pos == Pos::V).unwrap_or(false);
                    let next_is_ref = toks[i + 1..]
                        .iter()
                        .find(|x| !(x.pos == Pos::Prep && x.lemma == "to") && x.pos != Pos::Adv)
                        .map(|x| x.pos == Pos::StepRef)
                        .unwrap_or(false);
                    if LIGHT_VERBS.contains(&t.lemma.as_str()) && (next_is_to_verb || next_is_ref || toks.get(i + 1).map(|x| x.pos == Pos::V).unwrap_or(false)) {
                        light_pending = next_is_to_verb;
                        i += 1;
                        continue;
                    }
                    if LIGHT_VERBS.contains(&t.lemma.as_str()) && i + 1 == toks.len() {
                        i += 1;
                        continue;
                    }
                    let (vp, end) = gather_vp(toks, i);
                    main.push(vp);
                    i = end;
                }
                _ => i += 1,
            }
        }
        (main, before)
    }

    /// Condition span to formula: split on "or", then "and".
    fn cond_formula(&self, toks: &[Token], all: &[Token]) -> (Option<CondFormula>, Vec<VerbPhrase>) {
        let mut phrases = Vec::new();
        let mut disj = Vec::new();
        for group in toks.split(|t| is_kw(t, "or")) {
            let mut conj = Vec::new();
            for part in group.split(|t| is_kw(t, "and")) {
                if let Some(vp) = self.literal(part, all) {
                    let atom = CondFormula::Atom(vp.id());
                    conj.push(if vp.negated { CondFormula::not(atom) } else { atom });
                    phrases.push(vp);
                }
            }
            if !conj.is_empty() {
                disj.push(CondFormula::and(conj));
            }
        }
        if disj.is_empty() {
            (None, phrases)
        } else {
            (Some(CondFormula::or(disj)), phrases)
        }
    }

    fn literal(&self, toks: &[Token], all: &[Token]) -> Option<VerbPhrase> {
        let negs = toks.iter().filter(|t| is_kw(t, "no") || is_kw(t, "not")).count();
        let mut ts: Vec<Token> = toks.iter().filter(|t| t.pos != Pos::Keyword && t.pos != Pos::Punct).cloned().collect();
        // Existential "there are ...".
        if ts.len() >= 2 && ts[0].pos == Pos::Pron && ts[0].lemma == "there" && ts[1].pos == Pos::Aux {
            ts.drain(0..2);
        }
        if ts.is_empty() {
            return None;
        }
        let verb = ts.iter().position(|t| t.pos == Pos::V);
        let aux = ts.iter().position(|t| t.pos == Pos::Aux);
        let head_start = match (verb, aux) {
            (Some(v), Some(a)) => v.min(a),
            (Some(v), None) => v,
            (None, Some(a)) => a,
            (None, None) => ts.len(),
        };
        let subject: Vec<Token> = ts[..head_start].iter().filter(|t| !(t.pos == Pos::Prep && matches!(t.lemma.as_str(), "to" | "for"))).cloned().collect();
        let mut subj_lemmas: Vec<String> = Vec::new();
        let mut definite = subject.iter().any(|t| t.pos == Pos::Det && DEFINITE.contains(&t.lemma.as_str()));
        for t in &subject {
            if t.pos == Pos::Pron {
                if AGENTS.contains(&t.lemma.as_str()) {
                    return None;
                }
                if let Some((lemma, def)) = antecedent(all, t.start) {
                    subj_lemmas.push(lemma);
                    definite = def;
                }
            } else if matches!(t.pos, Pos::N | Pos::Adj | Pos::Num) {
                subj_lemmas.push(t.lemma.clone());
            }
        }
        let mut lemmas: Vec<String> = Vec::new();
        if head_start < ts.len() {
            if let Some(v) = verb {
                if !definite {
                    lemmas.extend(subj_lemmas);
                }
                lemmas.extend(gather_vp(&ts, v).0);
            } else {
                // Copula with a predicate adjective: "the light is green".
                let pred: Vec<String> = ts[head_start + 1..].iter().filter(|t| matches!(t.pos, Pos::Adj | Pos::N | Pos::Num)).map(|t| t.lemma.clone()).collect();
                if !definite {
                    lemmas.extend(subj_lemmas);
                }
                lemmas.extend(pred);
            }
        } else {
            lemmas = ts.iter().filter(|t| matches!(t.pos, Pos::N | Pos::Adj | Pos::Num)).map(|t| t.lemma.clone()).collect();
        }
        if lemmas.is_empty() {
            return None;
        }
        Some(VerbPhrase { lemmas, kind: PhraseKind::Cond, negated: negs % 2 == 1 })
    }
}

/// Most recent plural noun before byte offset `before`, with whether its
/// noun phrase is definite.
fn antecedent(all: &[Token], before: usize) -> Option<(String, bool)> {
    let idx = all.iter().rposition(|t| t.start < before && t.pos == Pos::N && t.text.to_lowercase() != t.lemma)?;
    let mut k = idx;
    let mut definite = false;
    while k > 0 {
        let p = &all[k - 1];
        match p.pos {
            Pos::Adj | Pos::N | Pos::Num => k -= 1,
            Pos::Det => {
                definite = DEFINITE.contains(&p.lemma.as_str());
                break;
            }
            _ => break,
        }
    }
    Some((all[idx].lemma.clone(), definite))
}

/// Collect a verb with its particle, complement and object nouns.
fn gather_vp(toks: &[Token], v: usize) -> (Vec<String>, usize) {
    let mut lemmas = alloc::vec![toks[v].lemma.clone()];
    let mut has_obj = false;
    let mut in_pp = false;
    let mut j = v + 1;
    while j < toks.len() {
        let t = &toks[j];
        match t.pos {
            Pos::Part => {
                lemmas.push(t.lemma.clone());
                j += 1;
            }
            Pos::Det | Pos::Adv => j += 1,
            Pos::Adj | Pos::N | Pos::Num => {
                lemmas.push(t.lemma.clone());
                has_obj = true;
                j += 1;
            }
            Pos::Keyword if (t.lemma == "and" || t.lemma == "or") && has_obj => {
                let mut k = j + 1;
                while k < toks.len() && toks[k].pos == Pos::Det {
                    k += 1;
                }
                let coordinated_noun = k < toks.len()
                    && matches!(toks[k].pos, Pos::N | Pos::Adj | Pos::Num)
                    && !toks[k..].iter().take_while(|x| !is_comma(x)).any(|x| matches!(x.pos, Pos::V | Pos::Aux));
                if coordinated_noun {
                    j += 1;
                } else {
                    break;
                }
            }
            Pos::Prep => {
                let to_verb = t.lemma == "to" && toks.get(j + 1).map(|x| matches!(x.pos, Pos::V | Pos::StepRef)).unwrap_or(false);
                if has_obj || in_pp || to_verb || matches!(t.lemma.as_str(), "before" | "after" | "until") {
                    break;
                }
                if toks.get(j + 1).map(|x| x.pos == Pos::StepRef).unwrap_or(false) {
                    break;
                }
                if PATH_PREPS.contains(&t.lemma.as_str()) {
                    lemmas.push(t.lemma.clone());
                }
                in_pp = true;
                j += 1;
            }
            _ => break,
        }
    }
    (lemmas, j)
}

fn keywords_of(toks: &[Token]) -> Vec<Keyword> {
    toks.iter()
        .filter_map(|t| match t.pos {
            Pos::StepRef => Some(Keyword::StepRef),
            Pos::Keyword => Some(match t.lemma.as_str() {
                "if" => Keyword::If,
                "wait" => Keyword::Wait,
                "until" => Keyword::Until,
                "after" => Keyword::After,
                "and" => Keyword::And,
                "or" => Keyword::Or,
                "no" => Keyword::No,
                _ => Keyword::Not,
            }),
            _ => None,
        })
        .collect()
}

fn iter_branches(mut b: Option<&ParsedStep>) -> impl Iterator<Item = &ParsedStep> {
    core::iter::from_fn(move || {
        let cur = b?;
        b = cur.else_branch.as_deref();
        Some(cur)
    })
}

fn finish(step_number: &str, text: &str, c: Clause, keywords: Vec<Keyword>) -> ParsedStep {
    let acts = ActionSet::from_iter(c.acts.iter().map(|a| a.join(" ")));
    let (rule, conds, hold) = match (&c.guard, &c.hold, &c.target) {
        (Some(g), _, Some(_)) => (Rule::Direct, g.clone(), None),
        (Some(g), Some((Some(h), _)), None) => (Rule::Conditional, g.clone(), Some(h.clone())),
        (Some(g), _, None) => (Rule::Conditional, g.clone(), None),
        (None, Some((Some(h), HoldKind::After)), Some(_)) => (Rule::Direct, h.clone(), None),
        (None, Some((Some(h), HoldKind::Until)), None) => (Rule::SelfUntil, h.clone(), None),
        (None, Some((Some(h), _)), None) => (Rule::SelfWait, h.clone(), None),
        (None, _, Some(_)) => (Rule::Direct, CondFormula::True, None),
        (None, _, None) => (Rule::Default, CondFormula::True, None),
    };
    ParsedStep {
        step_number: step_number.to_string(),
        text: text.to_string(),
        rule,
        conds,
        acts,
        keywords,
        direct_target: c.target,
        hold,
        else_branch: None,
        phrases: c.phrases,
        issues: c.issues,
    }
}

/// Parse a step with the embedded lexicon.
pub fn parse_step(step_number: &str, text: &str) -> Result<ParsedStep, ParseError> {
    StepParser::new().parse_step(step_number, text)
}

/// Condition and action phrases of a text, in the order found.
pub fn extract_phrases(text: &str) -> Vec<VerbPhrase> {
    match parse_step("0", text) {
        Ok(p) => p.phrases,
        Err(_) => Vec::new(),
    }
}

pub fn lemmatize(token: &str) -> String {
    Lexicon::embedded().lemmatize(token)
}
