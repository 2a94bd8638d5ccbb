//! Propositional guard formulas over named propositions.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A boolean formula over proposition ids.
///
/// `And`/`Or` hold at least two operands when built through the
/// constructors; `True`/`False` are the empty conjunction/disjunction.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CondFormula {
    True,
    False,
    Atom(String),
    Not(Box<CondFormula>),
    And(Vec<CondFormula>),
    Or(Vec<CondFormula>),
}

impl CondFormula {
    pub fn atom(name: &str) -> Self {
        CondFormula::Atom(normalize_atom(name))
    }

    pub fn not(f: CondFormula) -> Self {
        CondFormula::Not(Box::new(f))
    }

    pub fn and(parts: Vec<CondFormula>) -> Self {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                CondFormula::True => {}
                CondFormula::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => CondFormula::True,
            1 => flat.pop().unwrap(),
            _ => CondFormula::And(flat),
        }
    }

    pub fn or(parts: Vec<CondFormula>) -> Self {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                CondFormula::False => {}
                CondFormula::Or(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => CondFormula::False,
            1 => flat.pop().unwrap(),
            _ => CondFormula::Or(flat),
        }
    }

    pub fn and2(a: CondFormula, b: CondFormula) -> Self {
        Self::and(alloc::vec![a, b])
    }

    pub fn or2(a: CondFormula, b: CondFormula) -> Self {
        Self::or(alloc::vec![a, b])
    }

    /// Evaluate with `truth` deciding each atom.
    pub fn eval_with(&self, truth: &dyn Fn(&str) -> bool) -> bool {
        match self {
            CondFormula::True => true,
            CondFormula::False => false,
            CondFormula::Atom(a) => truth(a),
            CondFormula::Not(f) => !f.eval_with(truth),
            CondFormula::And(fs) => fs.iter().all(|f| f.eval_with(truth)),
            CondFormula::Or(fs) => fs.iter().any(|f| f.eval_with(truth)),
        }
    }

    /// Evaluate under the valuation where exactly the atoms in `true_set` hold.
    pub fn eval(&self, true_set: &BTreeSet<String>) -> bool {
        self.eval_with(&|a| true_set.contains(a))
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            CondFormula::True | CondFormula::False => {}
            CondFormula::Atom(a) => {
                out.insert(a.clone());
            }
            CondFormula::Not(f) => f.collect_atoms(out),
            CondFormula::And(fs) | CondFormula::Or(fs) => {
                for f in fs {
                    f.collect_atoms(out);
                }
            }
        }
    }

    /// Negation normal form: negations sit only on atoms.
    pub fn nnf(&self) -> CondFormula {
        self.nnf_pol(true)
    }

    fn nnf_pol(&self, positive: bool) -> CondFormula {
        match (self, positive) {
            (CondFormula::True, true) | (CondFormula::False, false) => CondFormula::True,
            (CondFormula::True, false) | (CondFormula::False, true) => CondFormula::False,
            (CondFormula::Atom(a), true) => CondFormula::Atom(a.clone()),
            (CondFormula::Atom(a), false) => CondFormula::not(CondFormula::Atom(a.clone())),
            (CondFormula::Not(f), p) => f.nnf_pol(!p),
            (CondFormula::And(fs), true) => Self::and(fs.iter().map(|f| f.nnf_pol(true)).collect()),
            (CondFormula::And(fs), false) => Self::or(fs.iter().map(|f| f.nnf_pol(false)).collect()),
            (CondFormula::Or(fs), true) => Self::or(fs.iter().map(|f| f.nnf_pol(true)).collect()),
            (CondFormula::Or(fs), false) => Self::and(fs.iter().map(|f| f.nnf_pol(false)).collect()),
        }
    }

    /// Logical negation pushed to the atoms.
    pub fn negate(&self) -> CondFormula {
        self.nnf_pol(false)
    }

    pub fn rename(&self, map: &dyn Fn(&str) -> String) -> CondFormula {
        match self {
            CondFormula::True => CondFormula::True,
            CondFormula::False => CondFormula::False,
            CondFormula::Atom(a) => CondFormula::Atom(map(a)),
            CondFormula::Not(f) => CondFormula::not(f.rename(map)),
            CondFormula::And(fs) => Self::and(fs.iter().map(|f| f.rename(map)).collect()),
            CondFormula::Or(fs) => Self::or(fs.iter().map(|f| f.rename(map)).collect()),
        }
    }

    /// Enumerate all valuations of the given atoms (at most 20).
    fn for_each_valuation(atoms: &[String], mut f: impl FnMut(&dyn Fn(&str) -> bool) -> bool) -> bool {
        let n = atoms.len();
        assert!(n <= 20, "too many atoms for truth-table comparison");
        for bits in 0u32..(1u32 << n) {
            let truth = |a: &str| {
                atoms
                    .iter()
                    .position(|x| x == a)
                    .map(|i| bits & (1 << i) != 0)
                    .unwrap_or(false)
            };
            if !f(&truth) {
                return false;
            }
        }
        true
    }

    pub fn equivalent(&self, other: &CondFormula) -> bool {
        let mut atoms = self.atoms();
        atoms.extend(other.atoms());
        let atoms: Vec<String> = atoms.into_iter().collect();
        Self::for_each_valuation(&atoms, |t| self.eval_with(t) == other.eval_with(t))
    }

    pub fn is_valid(&self) -> bool {
        let atoms: Vec<String> = self.atoms().into_iter().collect();
        Self::for_each_valuation(&atoms, |t| self.eval_with(t))
    }

    pub fn is_satisfiable(&self) -> bool {
        !self.negate().is_valid()
    }

    /// Replace a formula by `True`/`False` when it is valid or unsatisfiable.
    pub fn simplify(&self) -> CondFormula {
        if self.atoms().len() <= 12 {
            if self.is_valid() {
                return CondFormula::True;
            }
            if !self.is_satisfiable() {
                return CondFormula::False;
            }
        }
        self.nnf()
    }

    fn precedence(&self) -> u8 {
        match self {
            CondFormula::Or(_) => 1,
            CondFormula::And(_) => 2,
            _ => 3,
        }
    }
}

/// Lowercase, single-spaced form of a proposition id.
pub fn normalize_atom(name: &str) -> String {
    let mut out = String::new();
    for word in name.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&word.to_lowercase());
    }
    out
}

impl fmt::Display for CondFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CondFormula::True => f.write_str("true"),
            CondFormula::False => f.write_str("false"),
            CondFormula::Atom(a) => f.write_str(a),
            CondFormula::Not(inner) => {
                if inner.precedence() < 3 {
                    write!(f, "!({})", inner)
                } else {
                    write!(f, "!{}", inner)
                }
            }
            CondFormula::And(fs) | CondFormula::Or(fs) => {
                let sep = if matches!(self, CondFormula::And(_)) { " & " } else { " | " };
                for (i, part) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    // Nested n-ary operators are always bracketed so that
                    // printing and parsing round-trip structurally.
                    if part.precedence() < 3 {
                        write!(f, "({})", part)?;
                    } else {
                        write!(f, "{}", part)?;
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at byte {position}: {message}")]
pub struct FormulaSyntaxError {
    pub position: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Not,
    And,
    Or,
    LParen,
    RParen,
    Word(String),
}

fn is_atom_char(c: char) -> bool {
    !matches!(c, '!' | '¬' | '&' | '|' | '(' | ')' | '∧' | '∨')
}

fn lex(input: &str) -> Result<Vec<(usize, Tok)>, FormulaSyntaxError> {
    let mut out = Vec::new();
    let mut iter = input.char_indices().peekable();
    while let Some(&(pos, c)) = iter.peek() {
        match c {
            c if c.is_whitespace() => {
                iter.next();
            }
            '!' | '¬' => {
                iter.next();
                out.push((pos, Tok::Not));
            }
            '&' | '∧' => {
                iter.next();
                out.push((pos, Tok::And));
            }
            '|' | '∨' => {
                iter.next();
                out.push((pos, Tok::Or));
            }
            '(' => {
                iter.next();
                out.push((pos, Tok::LParen));
            }
            ')' => {
                iter.next();
                out.push((pos, Tok::RParen));
            }
            _ => {
                let mut word = String::new();
                while let Some(&(_, c)) = iter.peek() {
                    if !is_atom_char(c) {
                        break;
                    }
                    word.push(c);
                    iter.next();
                }
                let word = normalize_atom(&word);
                if word.is_empty() {
                    return Err(FormulaSyntaxError { position: pos, message: "unexpected character".to_string() });
                }
                out.push((pos, Tok::Word(word)));
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err(&self, message: &str) -> FormulaSyntaxError {
        FormulaSyntaxError { position: self.here(), message: message.to_string() }
    }

    fn or_expr(&mut self) -> Result<CondFormula, FormulaSyntaxError> {
        let mut parts = alloc::vec![self.and_expr()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            parts.push(self.and_expr()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { CondFormula::Or(parts) })
    }

    fn and_expr(&mut self) -> Result<CondFormula, FormulaSyntaxError> {
        let mut parts = alloc::vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { CondFormula::And(parts) })
    }

    fn unary(&mut self) -> Result<CondFormula, FormulaSyntaxError> {
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(CondFormula::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.or_expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Tok::Word(w)) => {
                self.pos += 1;
                Ok(match w.as_str() {
                    "true" => CondFormula::True,
                    "false" => CondFormula::False,
                    _ => CondFormula::Atom(w),
                })
            }
            _ => Err(self.err("expected a proposition, '!' or '('")),
        }
    }
}

impl FromStr for CondFormula {
    type Err = FormulaSyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let toks = lex(s)?;
        let mut p = Parser { toks, pos: 0, end: s.len() };
        let f = p.or_expr()?;
        if p.pos != p.toks.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(f)
    }
}

impl Serialize for CondFormula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CondFormula {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
