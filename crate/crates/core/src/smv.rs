//! SMV text export of a closed loop and a validator for the SMV subset it
//! emits.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::controller::{ActionSet, Controller};
use crate::formula::CondFormula;
use crate::ltl::Ltl;
use crate::model::{Model, EPS};

/// Map arbitrary names to distinct SMV identifiers.
struct Names {
    used: BTreeSet<String>,
    map: BTreeMap<String, String>,
}

const RESERVED: [&str; 25] = [
    "m", "c", "stuck", "MODULE", "VAR", "DEFINE", "INIT", "INVAR", "TRANS", "LTLSPEC", "TRUE", "FALSE", "next", "in", "boolean", "X", "F", "G", "U",
    "V", "main", "case", "esac", "mod", "union",
];

impl Names {
    fn new() -> Self {
        let mut used = BTreeSet::new();
        for r in RESERVED {
            used.insert(r.to_string());
        }
        Names { used, map: BTreeMap::new() }
    }

    fn get(&mut self, ns: &str, prefix: &str, name: &str) -> String {
        let key = format!("{}\u{0}{}", ns, name);
        if let Some(v) = self.map.get(&key) {
            return v.clone();
        }
        let mut base: String = name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else if c == '\'' { 'p' } else { '_' })
            .collect();
        if base.is_empty() || base.chars().next().unwrap().is_ascii_digit() {
            base.insert(0, '_');
        }
        let mut base = format!("{}{}", prefix, base);
        let stem = base.clone();
        let mut i = 1;
        while self.used.contains(&base) {
            i += 1;
            base = format!("{}_{}", stem, i);
        }
        self.used.insert(base.clone());
        self.map.insert(key, base.clone());
        base
    }

    fn alias(&mut self, ns: &str, name: &str, ident: &str) {
        self.map.insert(format!("{}\u{0}{}", ns, name), ident.to_string());
    }

    fn atom(&mut self, name: &str) -> String {
        self.get("a", "", name)
    }
}

fn cond_expr(f: &CondFormula, names: &mut Names) -> String {
    match f {
        CondFormula::True => "TRUE".into(),
        CondFormula::False => "FALSE".into(),
        CondFormula::Atom(a) => names.atom(a),
        CondFormula::Not(x) => format!("!{}", cond_expr(x, names)),
        CondFormula::And(xs) => {
            let parts: Vec<String> = xs.iter().map(|x| cond_expr(x, names)).collect();
            format!("({})", parts.join(" & "))
        }
        CondFormula::Or(xs) => {
            let parts: Vec<String> = xs.iter().map(|x| cond_expr(x, names)).collect();
            format!("({})", parts.join(" | "))
        }
    }
}

fn ltl_expr(f: &Ltl, names: &mut Names) -> String {
    match f {
        Ltl::True => "TRUE".into(),
        Ltl::False => "FALSE".into(),
        Ltl::Atom(a) => names.atom(a),
        Ltl::Not(x) => format!("!{}", ltl_unary(x, names)),
        Ltl::Next(x) => format!("X {}", ltl_unary(x, names)),
        Ltl::Eventually(x) => format!("F {}", ltl_unary(x, names)),
        Ltl::Always(x) => format!("G {}", ltl_unary(x, names)),
        Ltl::And(a, b) => format!("{} & {}", ltl_operand(a, names), ltl_operand(b, names)),
        Ltl::Or(a, b) => format!("{} | {}", ltl_operand(a, names), ltl_operand(b, names)),
        Ltl::Implies(a, b) => format!("{} -> {}", ltl_operand(a, names), ltl_operand(b, names)),
        Ltl::Until(a, b) => format!("{} U {}", ltl_operand(a, names), ltl_operand(b, names)),
        Ltl::Release(a, b) => format!("{} V {}", ltl_operand(a, names), ltl_operand(b, names)),
    }
}

fn is_binary(f: &Ltl) -> bool {
    matches!(f, Ltl::And(..) | Ltl::Or(..) | Ltl::Implies(..) | Ltl::Until(..) | Ltl::Release(..))
}

fn ltl_operand(f: &Ltl, names: &mut Names) -> String {
    if is_binary(f) {
        format!("({})", ltl_expr(f, names))
    } else {
        ltl_expr(f, names)
    }
}

fn ltl_unary(f: &Ltl, names: &mut Names) -> String {
    ltl_operand(f, names)
}

fn set_expr(var: &str, values: &[String]) -> String {
    match values.len() {
        0 => "FALSE".into(),
        1 => format!("{} = {}", var, values[0]),
        _ => format!("{} in {{{}}}", var, values.join(", ")),
    }
}

/// Single-module SMV text for the closed loop of `model` and `controller`.
/// The action variables hold the output of the move leaving the current
/// state, so a state's propositions are the label of that move.
pub fn export_smv(model: &Model, controller: &Controller, spec: Option<&Ltl>) -> String {
    let mut names = Names::new();
    let mstate: Vec<String> = model.states.iter().map(|s| names.get("m", "", s)).collect();
    let cstate: Vec<String> = controller.states.iter().map(|s| names.get("c", "", &s.id)).collect();
    let mname = |s: &str, names: &mut Names| names.get("m", "", s);
    let cname = |s: &str, names: &mut Names| names.get("c", "", s);

    let mut props: BTreeSet<String> = model.label_props.iter().cloned().collect();
    props.extend(controller.props.iter().cloned());
    props.remove("goal");
    let mut acts: BTreeSet<String> = model.action_props.iter().cloned().collect();
    acts.extend(controller.actions.iter().cloned());
    acts.remove(EPS);

    let mut out = String::from("MODULE main\nVAR\n");
    out.push_str(&format!("  m : {{{}}};\n", mstate.join(", ")));
    out.push_str(&format!("  c : {{{}}};\n", cstate.join(", ")));
    let act_var: BTreeMap<&String, String> = acts.iter().map(|a| (a, names.get("v", "act_", a))).collect();
    for (a, v) in &act_var {
        if !props.contains(*a) && a.as_str() != "goal" {
            names.alias("a", a, v);
        }
    }
    for v in act_var.values() {
        out.push_str(&format!("  {} : boolean;\n", v));
    }

    out.push_str("DEFINE\n");
    let label_states = |p: &str, names: &mut Names| -> Vec<String> {
        model.states.iter().filter(|s| model.labels_of(s).contains(p)).map(|s| mname(s, names)).collect()
    };
    for p in &props {
        let v = names.atom(p);
        let e = set_expr("m", &label_states(p, &mut names));
        out.push_str(&format!("  {} := {};\n", v, e));
    }
    let goal = names.atom("goal");
    let e = set_expr("m", &label_states("goal", &mut names));
    out.push_str(&format!("  {} := {};\n", goal, e));
    let eps = names.atom(EPS);
    let none: Vec<String> = act_var.values().map(|v| format!("!{}", v)).collect();
    out.push_str(&format!("  {} := {};\n", eps, if none.is_empty() { "TRUE".into() } else { none.join(" & ") }));

    let emits = |o: &ActionSet| -> String {
        let parts: Vec<String> =
            act_var.iter().map(|(a, v)| if o.contains(a) { v.clone() } else { format!("!{}", v) }).collect();
        if parts.is_empty() {
            "TRUE".into()
        } else {
            format!("({})", parts.join(" & "))
        }
    };
    // Model states with a successor under output `o`, and the moves.
    let model_moves = |o: &ActionSet| -> Vec<(&String, &String)> {
        let v = Model::action_valuation(o);
        model.transitions.iter().filter(|t| t.guard.eval(&v)).map(|t| (&t.from, &t.to)).collect()
    };
    let mut live = Vec::new();
    for (i, t) in controller.transitions.iter().enumerate() {
        let from = cname(&t.from, &mut names);
        let guard = cond_expr(&t.cond, &mut names);
        let mut has_succ: Vec<String> = Vec::new();
        for (f, _) in model_moves(&t.out) {
            let f = mname(f, &mut names);
            if !has_succ.contains(&f) {
                has_succ.push(f);
            }
        }
        let name = names.get("l", "live_", &i.to_string());
        out.push_str(&format!("  {} := c = {} & {} & ({});\n", name, from, guard, set_expr("m", &has_succ)));
        live.push(name);
    }
    let stuck = if live.is_empty() { "TRUE".into() } else { format!("!({})", live.join(" | ")) };
    out.push_str(&format!("  stuck := {};\n", stuck));

    out.push_str(&format!("INIT\n  m = {} & c = {}\n", mname(&model.initial, &mut names), cname(&controller.initial, &mut names)));

    let mut choices: Vec<String> =
        controller.transitions.iter().zip(&live).map(|(t, l)| format!("({} & {})", l, emits(&t.out))).collect();
    choices.push(format!("(stuck & {})", eps));
    out.push_str(&format!("INVAR\n  {}\n", choices.join("\n  | ")));

    let mut moves = Vec::new();
    for (i, t) in controller.transitions.iter().enumerate() {
        let to = cname(&t.to, &mut names);
        let steps: Vec<String> = model_moves(&t.out)
            .into_iter()
            .map(|(f, g)| {
                let (f, g) = (mname(f, &mut names), mname(g, &mut names));
                format!("(m = {} & next(m) = {})", f, g)
            })
            .collect();
        if steps.is_empty() {
            continue;
        }
        moves.push(format!("({} & {} & next(c) = {} & ({}))", live[i], emits(&t.out), to, steps.join(" | ")));
    }
    moves.push("(stuck & next(m) = m & next(c) = c)".into());
    out.push_str(&format!("TRANS\n  {}\n", moves.join("\n  | ")));

    if let Some(f) = spec {
        out.push_str(&format!("LTLSPEC {}\n", ltl_expr(f, &mut names)));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct SmvError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Sym(&'static str),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SmvError> {
    const SYMS: [&str; 16] = [":=", "->", "<->", "!=", "{", "}", "(", ")", ";", ":", ",", "=", "&", "|", "!", "."];
    let mut out = Vec::new();
    let b = text.as_bytes();
    let mut i = 0;
    let mut line = 1;
    'outer: while i < b.len() {
        let c = b[i] as char;
        if c == '\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if text[i..].starts_with("--") {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'$' || b[i] == b'#') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), line));
            continue;
        }
        for s in SYMS {
            if text[i..].starts_with(s) {
                out.push((Tok::Sym(s), line));
                i += s.len();
                continue 'outer;
            }
        }
        return Err(SmvError { line, message: format!("unexpected character {:?}", c) });
    }
    Ok(out)
}

struct Checker {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: BTreeMap<String, Option<BTreeSet<String>>>,
    defines: BTreeSet<String>,
}

const SECTIONS: [&str; 7] = ["VAR", "DEFINE", "INIT", "INVAR", "TRANS", "LTLSPEC", "MODULE"];

impl Checker {
    fn line(&self) -> usize {
        self.toks.get(self.pos).or(self.toks.last()).map(|t| t.1).unwrap_or(0)
    }

    fn err<T>(&self, m: &str) -> Result<T, SmvError> {
        Err(SmvError { line: self.line(), message: m.to_string() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == w)
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), SmvError> {
        if self.is_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(&format!("expected '{}'", s))
        }
    }

    fn ident(&mut self) -> Result<String, SmvError> {
        match self.peek() {
            Some(Tok::Ident(x)) if !SECTIONS.contains(&x.as_str()) => {
                let x = x.clone();
                self.pos += 1;
                Ok(x)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn at_section(&self) -> bool {
        self.peek().is_none() || matches!(self.peek(), Some(Tok::Ident(x)) if SECTIONS.contains(&x.as_str()))
    }

    fn module(&mut self) -> Result<(), SmvError> {
        if !self.is_word("MODULE") {
            return self.err("expected MODULE");
        }
        self.pos += 1;
        if !self.is_word("main") {
            return self.err("expected main");
        }
        self.pos += 1;
        while let Some(tok) = self.peek().cloned() {
            let Tok::Ident(section) = tok else { return self.err("expected section keyword") };
            self.pos += 1;
            match section.as_str() {
                "VAR" => self.var_section()?,
                "DEFINE" => self.define_section()?,
                "INIT" | "INVAR" | "TRANS" => {
                    let next_ok = section == "TRANS";
                    self.expr(next_ok, false)?;
                    if self.is_sym(";") {
                        self.pos += 1;
                    }
                }
                "LTLSPEC" => {
                    self.expr(false, true)?;
                    if self.is_sym(";") {
                        self.pos += 1;
                    }
                }
                "MODULE" => return self.err("only one module is supported"),
                _ => return self.err(&format!("unknown section {}", section)),
            }
        }
        Ok(())
    }

    fn var_section(&mut self) -> Result<(), SmvError> {
        while !self.at_section() {
            let name = self.ident()?;
            self.expect_sym(":")?;
            let ty = if self.is_word("boolean") {
                self.pos += 1;
                None
            } else {
                self.expect_sym("{")?;
                let mut vals = BTreeSet::new();
                loop {
                    let v = self.ident()?;
                    if !vals.insert(v) {
                        return self.err("duplicate enumeration value");
                    }
                    if self.is_sym(",") {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                self.expect_sym("}")?;
                Some(vals)
            };
            self.expect_sym(";")?;
            if self.vars.insert(name.clone(), ty).is_some() || self.defines.contains(&name) {
                return self.err(&format!("{} declared twice", name));
            }
        }
        Ok(())
    }

    fn define_section(&mut self) -> Result<(), SmvError> {
        while !self.at_section() {
            let name = self.ident()?;
            self.expect_sym(":=")?;
            self.expr(false, false)?;
            self.expect_sym(";")?;
            if self.vars.contains_key(&name) || !self.defines.insert(name.clone()) {
                return self.err(&format!("{} declared twice", name));
            }
        }
        Ok(())
    }

    fn expr(&mut self, next_ok: bool, temporal: bool) -> Result<(), SmvError> {
        self.implies(next_ok, temporal)
    }

    fn implies(&mut self, n: bool, t: bool) -> Result<(), SmvError> {
        self.or(n, t)?;
        if self.is_sym("->") || self.is_sym("<->") {
            self.pos += 1;
            self.implies(n, t)?;
        }
        Ok(())
    }

    fn or(&mut self, n: bool, t: bool) -> Result<(), SmvError> {
        self.and(n, t)?;
        while self.is_sym("|") {
            self.pos += 1;
            self.and(n, t)?;
        }
        Ok(())
    }

    fn and(&mut self, n: bool, t: bool) -> Result<(), SmvError> {
        self.until(n, t)?;
        while self.is_sym("&") {
            self.pos += 1;
            self.until(n, t)?;
        }
        Ok(())
    }

    fn until(&mut self, n: bool, t: bool) -> Result<(), SmvError> {
        self.cmp(n, t)?;
        if t && (self.is_word("U") || self.is_word("V")) {
            self.pos += 1;
            self.until(n, t)?;
        }
        Ok(())
    }

    fn cmp(&mut self, n: bool, t: bool) -> Result<(), SmvError> {
        let lhs = self.unary(n, t)?;
        if self.is_sym("=") || self.is_sym("!=") {
            self.pos += 1;
            let rhs = self.unary(n, t)?;
            self.check_value(&lhs, &rhs)?;
        } else if self.is_word("in") {
            self.pos += 1;
            self.expect_sym("{")?;
            loop {
                let v = self.ident()?;
                self.check_value(&lhs, &Some(v))?;
                if self.is_sym(",") {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            self.expect_sym("}")?;
        }
        Ok(())
    }

    /// Enumerated variable compared with a value: the value must belong to
    /// its type or be another variable.
    fn check_value(&self, lhs: &Option<String>, rhs: &Option<String>) -> Result<(), SmvError> {
        if let (Some(var), Some(val)) = (lhs, rhs) {
            if let Some(Some(vals)) = self.vars.get(var) {
                if !vals.contains(val) && !self.vars.contains_key(val) {
                    return self.err(&format!("{} is not a value of {}", val, var));
                }
            }
        }
        Ok(())
    }

    /// Returns the bare identifier or next(identifier) name, if that is
    /// what was parsed.
    fn unary(&mut self, n: bool, t: bool) -> Result<Option<String>, SmvError> {
        if self.is_sym("!") {
            self.pos += 1;
            self.unary(n, t)?;
            return Ok(None);
        }
        if t && (self.is_word("X") || self.is_word("F") || self.is_word("G")) {
            self.pos += 1;
            self.unary(n, t)?;
            return Ok(None);
        }
        if self.is_sym("(") {
            self.pos += 1;
            self.expr(n, t)?;
            self.expect_sym(")")?;
            return Ok(None);
        }
        if self.is_word("TRUE") || self.is_word("FALSE") {
            self.pos += 1;
            return Ok(None);
        }
        if self.is_word("next") {
            if !n {
                return self.err("next() outside TRANS");
            }
            self.pos += 1;
            self.expect_sym("(")?;
            let v = self.ident()?;
            self.expect_sym(")")?;
            if !self.vars.contains_key(&v) {
                return self.err(&format!("next() of undeclared variable {}", v));
            }
            return Ok(Some(v));
        }
        let id = self.ident()?;
        if !self.vars.contains_key(&id) && !self.defines.contains(&id) && !self.is_enum_value(&id) {
            return self.err(&format!("undeclared identifier {}", id));
        }
        Ok(Some(id))
    }

    fn is_enum_value(&self, id: &str) -> bool {
        self.vars.values().any(|v| v.as_ref().is_some_and(|s| s.contains(id)))
    }
}

/// Check that `text` stays within the SMV subset produced by
/// [`export_smv`]: one main module, enumerated/boolean variables, defines
/// used after declaration, and well-formed expressions.
pub fn validate_smv(text: &str) -> Result<(), SmvError> {
    let toks = lex(text)?;
    let mut c = Checker { toks, pos: 0, vars: BTreeMap::new(), defines: BTreeSet::new() };
    c.module()
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::controller::Controller;
    use crate::formula::CondFormula;
    use crate::ltl::parse_ltl;
    use crate::model::ModelTransition;

    fn tiny() -> (Model, Controller) {
        let m = Model {
            action_props: ["go"].iter().map(|s| s.to_string()).collect(),
            label_props: ["green light"].iter().map(|s| s.to_string()).collect(),
            states: alloc::vec!["p0".into(), "p1".into()],
            initial: "p0".into(),
            transitions: alloc::vec![
                ModelTransition { from: "p0".into(), guard: CondFormula::atom("go"), to: "p1".into() },
                ModelTransition { from: "p0".into(), guard: CondFormula::not(CondFormula::atom("go")), to: "p0".into() },
                ModelTransition { from: "p1".into(), guard: CondFormula::True, to: "p1".into() },
            ],
            labels: [("p0".to_string(), ["green light".to_string()].into_iter().collect()), ("p1".to_string(), ["goal".to_string()].into_iter().collect())]
                .into_iter()
                .collect(),
            surface: BTreeMap::new(),
        };
        let c = Controller::from_edges("q1", "q2", &[("q1", "green light", "go", "q2"), ("q1", "!green light", "eps", "q1"), ("q2", "true", "eps", "q2")])
            .unwrap();
        (m, c)
    }

    #[test]
    fn export_is_valid() {
        let (m, c) = tiny();
        let plain = export_smv(&m, &c, None);
        validate_smv(&plain).unwrap();
        assert!(!plain.contains("LTLSPEC"));
        let spec = parse_ltl("green_light & G F go -> F goal").unwrap();
        let text = export_smv(&m, &c, Some(&spec));
        validate_smv(&text).unwrap();
        assert!(text.contains("LTLSPEC (green_light & (G F act_go)) -> F goal") || text.contains("LTLSPEC (green_light & G F act_go) -> F goal"), "{}", text);
        let defines = text.split("DEFINE").nth(1).unwrap().split("INIT").next().unwrap();
        assert_eq!(defines.lines().filter(|l| l.contains(":= m")).count() + defines.lines().filter(|l| l.contains(":= FALSE")).count(), 2);
    }

    #[test]
    fn rejects_garbage() {
        assert!(validate_smv("MODULE main\nVAR\n  x : {a, b};\nINIT x = c\n").is_err());
        assert!(validate_smv("MODULE main\nVAR\n  x : boolean;\nINIT y\n").is_err());
        assert!(validate_smv("MODULE main\nVAR\n  x : boolean;\nINIT next(x)\n").is_err());
        assert!(validate_smv("MODULE main\nVAR\n  x : boolean;\nLTLSPEC G F x\n").is_ok());
        assert!(validate_smv("MODULE main\nVAR x : boolean\n").is_err());
    }
}
