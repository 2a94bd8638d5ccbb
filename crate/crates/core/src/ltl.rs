//! Future-time LTL: syntax, parsing and evaluation on lasso words.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::formula::normalize_atom;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ltl {
    True,
    False,
    Atom(String),
    Not(Box<Ltl>),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Implies(Box<Ltl>, Box<Ltl>),
    Next(Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
    Release(Box<Ltl>, Box<Ltl>),
    Eventually(Box<Ltl>),
    Always(Box<Ltl>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at byte {position}: {message}")]
pub struct LtlSyntaxError {
    pub position: usize,
    pub message: String,
}

impl Ltl {
    pub fn atom(name: &str) -> Ltl {
        Ltl::Atom(normalize_atom(name))
    }
    pub fn not(a: Ltl) -> Ltl {
        Ltl::Not(Box::new(a))
    }
    pub fn and(a: Ltl, b: Ltl) -> Ltl {
        Ltl::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Implies(Box::new(a), Box::new(b))
    }
    pub fn next(a: Ltl) -> Ltl {
        Ltl::Next(Box::new(a))
    }
    pub fn until(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Until(Box::new(a), Box::new(b))
    }
    pub fn release(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Release(Box::new(a), Box::new(b))
    }
    pub fn eventually(a: Ltl) -> Ltl {
        Ltl::Eventually(Box::new(a))
    }
    pub fn always(a: Ltl) -> Ltl {
        Ltl::Always(Box::new(a))
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Ltl::True | Ltl::False | Ltl::Atom(_) => 1,
            Ltl::Not(a) | Ltl::Next(a) | Ltl::Eventually(a) | Ltl::Always(a) => 1 + a.size(),
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Implies(a, b) | Ltl::Until(a, b) | Ltl::Release(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<String>) {
        match self {
            Ltl::True | Ltl::False => {}
            Ltl::Atom(a) => {
                out.insert(a.clone());
            }
            Ltl::Not(a) | Ltl::Next(a) | Ltl::Eventually(a) | Ltl::Always(a) => a.collect(out),
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Implies(a, b) | Ltl::Until(a, b) | Ltl::Release(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    pub fn rename(&self, map: &dyn Fn(&str) -> String) -> Ltl {
        let r = |x: &Ltl| Box::new(x.rename(map));
        match self {
            Ltl::True => Ltl::True,
            Ltl::False => Ltl::False,
            Ltl::Atom(a) => Ltl::Atom(map(a)),
            Ltl::Not(a) => Ltl::Not(r(a)),
            Ltl::Next(a) => Ltl::Next(r(a)),
            Ltl::Eventually(a) => Ltl::Eventually(r(a)),
            Ltl::Always(a) => Ltl::Always(r(a)),
            Ltl::And(a, b) => Ltl::And(r(a), r(b)),
            Ltl::Or(a, b) => Ltl::Or(r(a), r(b)),
            Ltl::Implies(a, b) => Ltl::Implies(r(a), r(b)),
            Ltl::Until(a, b) => Ltl::Until(r(a), r(b)),
            Ltl::Release(a, b) => Ltl::Release(r(a), r(b)),
        }
    }

    /// Negation normal form over until/release/next.
    pub fn nnf(&self) -> Nnf {
        self.to_nnf(true)
    }

    fn to_nnf(&self, pos: bool) -> Nnf {
        let b = |x: Nnf| Box::new(x);
        match self {
            Ltl::True => {
                if pos {
                    Nnf::True
                } else {
                    Nnf::False
                }
            }
            Ltl::False => {
                if pos {
                    Nnf::False
                } else {
                    Nnf::True
                }
            }
            Ltl::Atom(a) => Nnf::Lit(a.clone(), pos),
            Ltl::Not(a) => a.to_nnf(!pos),
            Ltl::And(x, y) => {
                if pos {
                    Nnf::And(b(x.to_nnf(true)), b(y.to_nnf(true)))
                } else {
                    Nnf::Or(b(x.to_nnf(false)), b(y.to_nnf(false)))
                }
            }
            Ltl::Or(x, y) => {
                if pos {
                    Nnf::Or(b(x.to_nnf(true)), b(y.to_nnf(true)))
                } else {
                    Nnf::And(b(x.to_nnf(false)), b(y.to_nnf(false)))
                }
            }
            Ltl::Implies(x, y) => {
                if pos {
                    Nnf::Or(b(x.to_nnf(false)), b(y.to_nnf(true)))
                } else {
                    Nnf::And(b(x.to_nnf(true)), b(y.to_nnf(false)))
                }
            }
            Ltl::Next(x) => Nnf::Next(b(x.to_nnf(pos))),
            Ltl::Until(x, y) => {
                if pos {
                    Nnf::Until(b(x.to_nnf(true)), b(y.to_nnf(true)))
                } else {
                    Nnf::Release(b(x.to_nnf(false)), b(y.to_nnf(false)))
                }
            }
            Ltl::Release(x, y) => {
                if pos {
                    Nnf::Release(b(x.to_nnf(true)), b(y.to_nnf(true)))
                } else {
                    Nnf::Until(b(x.to_nnf(false)), b(y.to_nnf(false)))
                }
            }
            Ltl::Eventually(x) => {
                if pos {
                    Nnf::Until(b(Nnf::True), b(x.to_nnf(true)))
                } else {
                    Nnf::Release(b(Nnf::False), b(x.to_nnf(false)))
                }
            }
            Ltl::Always(x) => {
                if pos {
                    Nnf::Release(b(Nnf::False), b(x.to_nnf(true)))
                } else {
                    Nnf::Until(b(Nnf::True), b(x.to_nnf(false)))
                }
            }
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Ltl::Implies(..) => 1,
            Ltl::Or(..) => 2,
            Ltl::And(..) => 3,
            Ltl::Until(..) | Ltl::Release(..) => 4,
            _ => 5,
        }
    }
}

/// LTL in negation normal form; literals carry their polarity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Nnf {
    True,
    False,
    Lit(String, bool),
    And(Box<Nnf>, Box<Nnf>),
    Or(Box<Nnf>, Box<Nnf>),
    Next(Box<Nnf>),
    Until(Box<Nnf>, Box<Nnf>),
    Release(Box<Nnf>, Box<Nnf>),
}

fn write_atom(f: &mut fmt::Formatter<'_>, a: &str) -> fmt::Result {
    let simple = !a.is_empty()
        && a.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == ' ')
        && !a.starts_with(|c: char| c.is_ascii_digit())
        && !a.contains("  ")
        && !matches!(a, "true" | "false");
    if simple {
        f.write_str(&a.replace(' ', "_"))
    } else {
        write!(f, "\"{}\"", a)
    }
}

impl fmt::Display for Ltl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f: &mut fmt::Formatter<'_>, x: &Ltl, min: u8| -> fmt::Result {
            if x.prec() < min {
                write!(f, "({})", x)
            } else {
                write!(f, "{}", x)
            }
        };
        match self {
            Ltl::True => f.write_str("true"),
            Ltl::False => f.write_str("false"),
            Ltl::Atom(a) => write_atom(f, a),
            Ltl::Not(a) => {
                f.write_str("!")?;
                sub(f, a, 5)
            }
            Ltl::Next(a) => {
                f.write_str("X ")?;
                sub(f, a, 5)
            }
            Ltl::Eventually(a) => {
                f.write_str("F ")?;
                sub(f, a, 5)
            }
            Ltl::Always(a) => {
                f.write_str("G ")?;
                sub(f, a, 5)
            }
            Ltl::And(a, b) => {
                sub(f, a, 4)?;
                f.write_str(" & ")?;
                sub(f, b, 4)
            }
            Ltl::Or(a, b) => {
                sub(f, a, 3)?;
                f.write_str(" | ")?;
                sub(f, b, 3)
            }
            Ltl::Implies(a, b) => {
                sub(f, a, 2)?;
                f.write_str(" -> ")?;
                sub(f, b, 1)
            }
            Ltl::Until(a, b) => {
                sub(f, a, 5)?;
                f.write_str(" U ")?;
                sub(f, b, 5)
            }
            Ltl::Release(a, b) => {
                sub(f, a, 5)?;
                f.write_str(" R ")?;
                sub(f, b, 5)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    Un(char),
    Bin(char),
    True,
    False,
    Atom(String),
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>, LtlSyntaxError> {
    let bytes: Vec<(usize, char)> = s.char_indices().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '!' | '¬' => Tok::Not,
            '&' => {
                if i + 1 < bytes.len() && bytes[i + 1].1 == '&' {
                    i += 1;
                }
                Tok::And
            }
            '|' => {
                if i + 1 < bytes.len() && bytes[i + 1].1 == '|' {
                    i += 1;
                }
                Tok::Or
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '-' => {
                if i + 1 < bytes.len() && bytes[i + 1].1 == '>' {
                    i += 1;
                    Tok::Implies
                } else {
                    return Err(LtlSyntaxError { position: pos, message: "expected '->'".to_string() });
                }
            }
            '"' => {
                let mut j = i + 1;
                let mut text = String::new();
                while j < bytes.len() && bytes[j].1 != '"' {
                    text.push(bytes[j].1);
                    j += 1;
                }
                if j >= bytes.len() {
                    return Err(LtlSyntaxError { position: pos, message: "unterminated quoted proposition".to_string() });
                }
                i = j;
                let name = normalize_atom(&text);
                if name.is_empty() {
                    return Err(LtlSyntaxError { position: pos, message: "empty proposition".to_string() });
                }
                Tok::Atom(name)
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut j = i;
                let mut word = String::new();
                while j < bytes.len() && (bytes[j].1.is_alphanumeric() || bytes[j].1 == '_') {
                    word.push(bytes[j].1);
                    j += 1;
                }
                i = j - 1;
                match word.as_str() {
                    "X" | "F" | "G" => Tok::Un(word.chars().next().unwrap()),
                    "U" | "R" | "V" => Tok::Bin(if word == "U" { 'U' } else { 'R' }),
                    "true" | "TRUE" => Tok::True,
                    "false" | "FALSE" => Tok::False,
                    _ => Tok::Atom(normalize_atom(&word.replace('_', " "))),
                }
            }
            _ => return Err(LtlSyntaxError { position: pos, message: format!("unexpected character '{}'", c) }),
        };
        out.push((pos, tok));
        i += 1;
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
        self.toks.get(self.pos).map(|t| &t.1)
    }
    fn err(&self, m: &str) -> LtlSyntaxError {
        LtlSyntaxError { position: self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end), message: m.to_string() }
    }
    fn implies(&mut self) -> Result<Ltl, LtlSyntaxError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Implies) {
            self.pos += 1;
            let rhs = self.implies()?;
            return Ok(Ltl::implies(lhs, rhs));
        }
        Ok(lhs)
    }
    fn or(&mut self) -> Result<Ltl, LtlSyntaxError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let rhs = self.and()?;
            lhs = Ltl::or(lhs, rhs);
        }
        Ok(lhs)
    }
    fn and(&mut self) -> Result<Ltl, LtlSyntaxError> {
        let mut lhs = self.binary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.binary()?;
            lhs = Ltl::and(lhs, rhs);
        }
        Ok(lhs)
    }
    fn binary(&mut self) -> Result<Ltl, LtlSyntaxError> {
        let lhs = self.unary()?;
        if let Some(Tok::Bin(op)) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.binary()?;
            return Ok(if op == 'U' { Ltl::until(lhs, rhs) } else { Ltl::release(lhs, rhs) });
        }
        Ok(lhs)
    }
    fn unary(&mut self) -> Result<Ltl, LtlSyntaxError> {
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Ltl::not(self.unary()?))
            }
            Some(Tok::Un(op)) => {
                self.pos += 1;
                let a = self.unary()?;
                Ok(match op {
                    'X' => Ltl::next(a),
                    'F' => Ltl::eventually(a),
                    _ => Ltl::always(a),
                })
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let a = self.implies()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(a)
            }
            Some(Tok::True) => {
                self.pos += 1;
                Ok(Ltl::True)
            }
            Some(Tok::False) => {
                self.pos += 1;
                Ok(Ltl::False)
            }
            Some(Tok::Atom(a)) => {
                self.pos += 1;
                Ok(Ltl::Atom(a))
            }
            _ => Err(self.err("expected a formula")),
        }
    }
}

impl FromStr for Ltl {
    type Err = LtlSyntaxError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let toks = lex(s)?;
        let mut p = Parser { toks, pos: 0, end: s.len() };
        let f = p.implies()?;
        if p.pos != p.toks.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(f)
    }
}

pub fn parse_ltl(text: &str) -> Result<Ltl, LtlSyntaxError> {
    text.parse()
}

/// An ultimately periodic word `stem · cycle^ω`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LassoWord {
    pub stem: Vec<BTreeSet<String>>,
    pub cycle: Vec<BTreeSet<String>>,
}

impl LassoWord {
    fn len(&self) -> usize {
        self.stem.len() + self.cycle.len()
    }
    fn succ(&self, i: usize) -> usize {
        if i + 1 < self.len() {
            i + 1
        } else {
            self.stem.len()
        }
    }
    fn letter(&self, i: usize) -> &BTreeSet<String> {
        if i < self.stem.len() {
            &self.stem[i]
        } else {
            &self.cycle[i - self.stem.len()]
        }
    }
}

/// Truth of `f` at position 0 of the lasso word, computed directly from
/// the semantics by fixpoint iteration over the finitely many positions.
pub fn holds_on_lasso(f: &Ltl, w: &LassoWord) -> bool {
    assert!(!w.cycle.is_empty(), "lasso cycle must be non-empty");
    eval_positions(f, w)[0]
}

fn eval_positions(f: &Ltl, w: &LassoWord) -> Vec<bool> {
    let n = w.len();
    match f {
        Ltl::True => alloc::vec![true; n],
        Ltl::False => alloc::vec![false; n],
        Ltl::Atom(a) => (0..n).map(|i| w.letter(i).contains(a)).collect(),
        Ltl::Not(a) => eval_positions(a, w).into_iter().map(|x| !x).collect(),
        Ltl::And(a, b) => zip(eval_positions(a, w), eval_positions(b, w), |x, y| x && y),
        Ltl::Or(a, b) => zip(eval_positions(a, w), eval_positions(b, w), |x, y| x || y),
        Ltl::Implies(a, b) => zip(eval_positions(a, w), eval_positions(b, w), |x, y| !x || y),
        Ltl::Next(a) => {
            let v = eval_positions(a, w);
            (0..n).map(|i| v[w.succ(i)]).collect()
        }
        Ltl::Until(a, b) => until(&eval_positions(a, w), &eval_positions(b, w), w),
        Ltl::Release(a, b) => {
            let na: Vec<bool> = eval_positions(a, w).into_iter().map(|x| !x).collect();
            let nb: Vec<bool> = eval_positions(b, w).into_iter().map(|x| !x).collect();
            until(&na, &nb, w).into_iter().map(|x| !x).collect()
        }
        Ltl::Eventually(a) => until(&alloc::vec![true; n], &eval_positions(a, w), w),
        Ltl::Always(a) => {
            let na: Vec<bool> = eval_positions(a, w).into_iter().map(|x| !x).collect();
            until(&alloc::vec![true; n], &na, w).into_iter().map(|x| !x).collect()
        }
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

/// Least fixpoint of `v[i] = b[i] || (a[i] && v[succ i])`.
fn until(a: &[bool], b: &[bool], w: &LassoWord) -> Vec<bool> {
    let n = w.len();
    let mut v = alloc::vec![false; n];
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let nv = b[i] || (a[i] && v[w.succ(i)]);
            if nv != v[i] {
                v[i] = nv;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
}
