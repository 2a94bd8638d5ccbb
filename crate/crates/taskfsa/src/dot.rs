//! Graphviz rendering of controllers and models, and a checker for the
//! DOT subset written here.

use std::fmt::Write;

use taskfsa_core::{Controller, Model};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Edges are labelled "(condition, action)"; the initial state has an
/// arrow from a point node and the absorbing state is double-circled.
pub fn controller_dot(c: &Controller) -> String {
    let mut out = String::from("digraph controller {\n  rankdir=LR;\n  node [shape=circle];\n  __start [shape=point, label=\"\"];\n");
    for s in &c.states {
        if s.id == c.absorbing {
            let _ = writeln!(out, "  {} [shape=doublecircle];", quote(&s.id));
        } else {
            let _ = writeln!(out, "  {};", quote(&s.id));
        }
    }
    let _ = writeln!(out, "  __start -> {};", quote(&c.initial));
    for t in &c.transitions {
        let label = format!("({}, {})", t.cond, t.out);
        let _ = writeln!(out, "  {} -> {} [label={}];", quote(&t.from), quote(&t.to), quote(&label));
    }
    out.push_str("}\n");
    out
}

/// States are annotated "state: {labels}"; edges carry their guards.
pub fn model_dot(m: &Model) -> String {
    let mut out = String::from("digraph model {\n  rankdir=LR;\n  node [shape=circle];\n  __start [shape=point, label=\"\"];\n");
    for s in &m.states {
        let labels: Vec<&str> = m.labels.get(s).map(|l| l.iter().map(String::as_str).collect()).unwrap_or_default();
        let text = format!("{}: {{{}}}", s, labels.join(", "));
        let _ = writeln!(out, "  {} [label={}];", quote(s), quote(&text));
    }
    let _ = writeln!(out, "  __start -> {};", quote(&m.initial));
    for t in &m.transitions {
        let _ = writeln!(out, "  {} -> {} [label={}];", quote(&t.from), quote(&t.to), quote(&t.guard.to_string()));
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("DOT syntax error at byte {offset}: {message}")]
pub struct DotError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Id(String),
    Sym(&'static str),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, DotError> {
    let b = text.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if text[i..].starts_with("//") {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
        } else if text[i..].starts_with("->") {
            out.push((Tok::Sym("->"), i));
            i += 2;
        } else if let Some(s) = ["{", "}", "[", "]", ";", ",", "="].iter().find(|s| s.as_bytes()[0] == c) {
            out.push((Tok::Sym(s), i));
            i += 1;
        } else if c == b'"' {
            let start = i;
            i += 1;
            let mut s = String::new();
            loop {
                match b.get(i) {
                    None => return Err(DotError { offset: start, message: "unterminated string".into() }),
                    Some(b'"') => break,
                    Some(b'\\') if i + 1 < b.len() => {
                        s.push(b[i + 1] as char);
                        i += 2;
                    }
                    Some(_) => {
                        let ch = text[i..].chars().next().unwrap();
                        s.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            i += 1;
            out.push((Tok::Id(s), start));
        } else if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' || c == b'-' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'.') {
                i += 1;
            }
            if i == start {
                return Err(DotError { offset: i, message: "unexpected '-'".into() });
            }
            out.push((Tok::Id(text[start..i].to_string()), start));
        } else {
            return Err(DotError { offset: i, message: format!("unexpected character {:?}", c as char) });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn err<T>(&self, m: &str) -> Result<T, DotError> {
        let offset = self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end);
        Err(DotError { offset, message: m.into() })
    }
    fn sym(&self, s: &str) -> bool {
        matches!(self.toks.get(self.pos), Some((Tok::Sym(x), _)) if *x == s)
    }
    fn expect(&mut self, s: &str) -> Result<(), DotError> {
        if self.sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(&format!("expected '{}'", s))
        }
    }
    fn id(&mut self) -> Result<String, DotError> {
        match self.toks.get(self.pos) {
            Some((Tok::Id(s), _)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }
    fn attr_list(&mut self) -> Result<(), DotError> {
        while self.sym("[") {
            self.pos += 1;
            while !self.sym("]") {
                self.id()?;
                self.expect("=")?;
                self.id()?;
                if self.sym(",") || self.sym(";") {
                    self.pos += 1;
                }
            }
            self.expect("]")?;
        }
        Ok(())
    }
    fn graph(&mut self) -> Result<(), DotError> {
        if let Some((Tok::Id(s), _)) = self.toks.get(self.pos) {
            if s == "strict" {
                self.pos += 1;
            }
        }
        match self.id()?.as_str() {
            "digraph" => {}
            _ => return self.err("expected digraph"),
        }
        if !self.sym("{") {
            self.id()?;
        }
        self.expect("{")?;
        while !self.sym("}") {
            if self.pos >= self.toks.len() {
                return self.err("unexpected end of input");
            }
            let first = self.id()?;
            if self.sym("=") {
                self.pos += 1;
                self.id()?;
            } else if matches!(first.as_str(), "graph" | "node" | "edge") && self.sym("[") {
                self.attr_list()?;
            } else {
                while self.sym("->") {
                    self.pos += 1;
                    self.id()?;
                }
                self.attr_list()?;
            }
            if self.sym(";") {
                self.pos += 1;
            }
        }
        self.expect("}")?;
        if self.pos != self.toks.len() {
            return self.err("trailing input");
        }
        Ok(())
    }
}

pub fn validate_dot(text: &str) -> Result<(), DotError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0, end: text.len() }.graph()
}
