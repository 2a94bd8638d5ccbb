//! Model checking of controller/model products against LTL specifications.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::buchi::{to_buchi, BuchiAutomaton};
use crate::controller::{ActionSet, Controller, StateId};
use crate::ltl::{holds_on_lasso, LassoWord, Ltl};
use crate::model::Model;
use crate::product::{build_product, DeadlockPolicy, Product};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("alphabet mismatch: {0:?} not in the model vocabulary")]
    AlphabetMismatch(Vec<String>),
    #[error("no lasso exists within stem {max_stem} / loop {max_loop}")]
    BoundsTooSmall { max_stem: usize, max_loop: usize },
}

/// One product move: the state it leaves and what happens on it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub model_state: StateId,
    pub controller_state: StateId,
    pub inputs: BTreeSet<String>,
    pub output: ActionSet,
    pub label: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub stuck: bool,
}

/// A violating run `stem · cycle^ω`; the last cycle step returns to the first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub stem: Vec<TraceStep>,
    pub cycle: Vec<TraceStep>,
}

/// Model-state path of a counterexample with stuttering removed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelProjection {
    pub stem: Vec<StateId>,
    pub cycle: Vec<StateId>,
}

impl fmt::Display for ModelProjection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.stem {
            write!(f, "{} -> ", s)?;
        }
        write!(f, "loop({})", self.cycle.join(", "))
    }
}

fn collapse(xs: &[StateId]) -> Vec<StateId> {
    let mut out: Vec<StateId> = Vec::new();
    for x in xs {
        if out.last() != Some(x) {
            out.push(x.clone());
        }
    }
    out
}

impl Counterexample {
    pub fn word(&self) -> LassoWord {
        LassoWord {
            stem: self.stem.iter().map(|s| s.label.clone()).collect(),
            cycle: self.cycle.iter().map(|s| s.label.clone()).collect(),
        }
    }

    pub fn projection(&self) -> ModelProjection {
        let stem_states: Vec<StateId> = self.stem.iter().map(|s| s.model_state.clone()).collect();
        let cyc_states: Vec<StateId> = self.cycle.iter().map(|s| s.model_state.clone()).collect();
        let mut cycle = collapse(&cyc_states);
        while cycle.len() > 1 && cycle.first() == cycle.last() {
            cycle.pop();
        }
        let mut stem = collapse(&stem_states);
        while !cycle.is_empty() && stem.last() == cycle.first() {
            stem.pop();
        }
        ModelProjection { stem, cycle }
    }

    /// Text rendering: projection, then one row per move.
    pub fn render(&self) -> String {
        let mut out = format!("model path: {}\n", self.projection());
        let row = |tag: &str, s: &TraceStep| {
            let inputs: Vec<&str> = s.inputs.iter().map(|x| x.as_str()).collect();
            let label: Vec<&str> = s.label.iter().map(|x| x.as_str()).collect();
            format!(
                "{:<5} ({}, {})  inputs {{{}}}  action {}  label {{{}}}{}\n",
                tag,
                s.model_state,
                s.controller_state,
                inputs.join(", "),
                s.output,
                label.join(", "),
                if s.stuck { "  [stuck]" } else { "" }
            )
        };
        for s in &self.stem {
            out.push_str(&row("stem", s));
        }
        for s in &self.cycle {
            out.push_str(&row("loop", s));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub spec: String,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    pub product_states: usize,
    pub buchi_states: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub deadlock: DeadlockPolicy,
}

/// Controller and spec atoms that the model does not know about.
pub fn alphabet_mismatch(model: &Model, controller: &Controller, spec: &Ltl) -> Vec<String> {
    let (props, acts) = controller.used_vocabulary();
    let mut bad = Vec::new();
    for p in props {
        if !model.label_props.contains(&p) {
            bad.push(p);
        }
    }
    for a in acts {
        if !model.action_props.contains(&a) {
            bad.push(a);
        }
    }
    let vocab = model.vocabulary();
    for a in spec.atoms() {
        if !vocab.contains(&a) && !bad.contains(&a) {
            bad.push(a);
        }
    }
    bad
}

fn step_of(product: &Product, state: usize, edge: usize) -> TraceStep {
    let (p, q) = &product.states[state];
    let e = &product.edges[state][edge];
    TraceStep {
        model_state: p.clone(),
        controller_state: q.clone(),
        inputs: e.inputs.clone(),
        output: e.out.clone(),
        label: e.label.clone(),
        stuck: e.stuck,
    }
}

/// Synchronous product of the system with the automaton for the negated spec.
struct Combined {
    /// (product state, automaton state)
    nodes: Vec<(usize, usize)>,
    /// successors: (node, product edge index)
    succ: Vec<Vec<(usize, usize)>>,
    accepting: Vec<bool>,
}

fn combine(product: &Product, ba: &BuchiAutomaton) -> Combined {
    let mut index = alloc::collections::BTreeMap::new();
    let mut nodes = alloc::vec![(0usize, ba.initial)];
    index.insert((0usize, ba.initial), 0usize);
    let mut succ: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut i = 0;
    while i < nodes.len() {
        let (s, b) = nodes[i];
        let mut out = Vec::new();
        for (ei, e) in product.edges[s].iter().enumerate() {
            for (g, b2) in &ba.edges[b] {
                if g.allows(&e.label) {
                    let key = (e.to, *b2);
                    let j = *index.entry(key).or_insert_with(|| {
                        nodes.push(key);
                        nodes.len() - 1
                    });
                    if !out.contains(&(j, ei)) {
                        out.push((j, ei));
                    }
                }
            }
        }
        succ.push(out);
        i += 1;
    }
    let accepting = nodes.iter().map(|&(_, b)| ba.accepting[b]).collect();
    Combined { nodes, succ, accepting }
}

/// Nested depth-first search for an accepting cycle.
fn nested_dfs(g: &Combined) -> bool {
    let n = g.nodes.len();
    let mut blue = alloc::vec![false; n];
    let mut red = alloc::vec![false; n];
    let mut stack: Vec<(usize, usize)> = alloc::vec![(0, 0)];
    blue[0] = true;
    while let Some(&mut (v, ref mut k)) = stack.last_mut() {
        if *k < g.succ[v].len() {
            let w = g.succ[v][*k].0;
            *k += 1;
            if !blue[w] {
                blue[w] = true;
                stack.push((w, 0));
            }
            continue;
        }
        stack.pop();
        if g.accepting[v] {
            // Inner search for a path back to the seed.
            let mut inner: Vec<(usize, usize)> = alloc::vec![(v, 0)];
            while let Some(&mut (x, ref mut j)) = inner.last_mut() {
                if *j < g.succ[x].len() {
                    let y = g.succ[x][*j].0;
                    *j += 1;
                    if y == v {
                        return true;
                    }
                    if !red[y] {
                        red[y] = true;
                        inner.push((y, 0));
                    }
                    continue;
                }
                inner.pop();
            }
        }
    }
    false
}

/// BFS tree from `start`; returns predecessor links (node, via edge index).
fn bfs(g: &Combined, start: usize) -> Vec<Option<(usize, usize)>> {
    let n = g.nodes.len();
    let mut pred: Vec<Option<(usize, usize)>> = alloc::vec![None; n];
    let mut seen = alloc::vec![false; n];
    let mut q = VecDeque::new();
    seen[start] = true;
    q.push_back(start);
    while let Some(v) = q.pop_front() {
        for &(w, ei) in &g.succ[v] {
            if !seen[w] {
                seen[w] = true;
                pred[w] = Some((v, ei));
                q.push_back(w);
            }
        }
    }
    pred
}

fn path_to(pred: &[Option<(usize, usize)>], start: usize, target: usize) -> Vec<(usize, usize)> {
    let mut path = Vec::new();
    let mut cur = target;
    while cur != start {
        let (p, ei) = pred[cur].expect("target reachable");
        path.push((p, ei));
        cur = p;
    }
    path.reverse();
    path
}

/// Lasso with the shortest stem among accepting nodes on a cycle.
fn shortest_lasso(g: &Combined) -> Option<(Vec<(usize, usize)>, Vec<(usize, usize)>)> {
    let n = g.nodes.len();
    let pred = bfs(g, 0);
    let mut order: Vec<usize> = Vec::new();
    {
        let mut seen = alloc::vec![false; n];
        let mut q = VecDeque::new();
        q.push_back(0);
        seen[0] = true;
        while let Some(v) = q.pop_front() {
            order.push(v);
            for &(w, _) in &g.succ[v] {
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
    }
    for &a in &order {
        if !g.accepting[a] {
            continue;
        }
        // Shortest cycle through `a`.
        let mut cpred: Vec<Option<(usize, usize)>> = alloc::vec![None; n];
        let mut seen = alloc::vec![false; n];
        let mut q = VecDeque::new();
        let mut closing: Option<(usize, usize)> = None;
        q.push_back(a);
        seen[a] = true;
        'outer: while let Some(v) = q.pop_front() {
            for &(w, ei) in &g.succ[v] {
                if w == a {
                    closing = Some((v, ei));
                    break 'outer;
                }
                if !seen[w] {
                    seen[w] = true;
                    cpred[w] = Some((v, ei));
                    q.push_back(w);
                }
            }
        }
        if let Some((last, ei)) = closing {
            let stem = path_to(&pred, 0, a);
            let mut cycle = if last == a { Vec::new() } else { path_to(&cpred, a, last) };
            cycle.push((last, ei));
            return Some((stem, cycle));
        }
    }
    None
}

fn to_steps(product: &Product, g: &Combined, path: &[(usize, usize)]) -> Vec<TraceStep> {
    path.iter().map(|&(node, ei)| step_of(product, g.nodes[node].0, ei)).collect()
}

fn deadlock_counterexample(product: &Product) -> Option<Counterexample> {
    let stuck = product.deadlocks().next()?;
    // BFS over the product for a path to the deadlock.
    let n = product.state_count();
    let mut pred: Vec<Option<(usize, usize)>> = alloc::vec![None; n];
    let mut seen = alloc::vec![false; n];
    let mut q = VecDeque::new();
    seen[0] = true;
    q.push_back(0);
    while let Some(v) = q.pop_front() {
        for (ei, e) in product.edges[v].iter().enumerate() {
            if !seen[e.to] {
                seen[e.to] = true;
                pred[e.to] = Some((v, ei));
                q.push_back(e.to);
            }
        }
    }
    let mut stem = Vec::new();
    let mut cur = stuck;
    while cur != 0 {
        let (p, ei) = pred[cur]?;
        stem.push(step_of(product, p, ei));
        cur = p;
    }
    stem.reverse();
    Some(Counterexample { stem, cycle: alloc::vec![step_of(product, stuck, 0)] })
}

/// Decide whether every run of the closed loop satisfies `spec`.
pub fn check(model: &Model, controller: &Controller, spec: &Ltl, options: CheckOptions) -> Result<Verdict, CheckError> {
    let bad = alphabet_mismatch(model, controller, spec);
    if !bad.is_empty() {
        return Err(CheckError::AlphabetMismatch(bad));
    }
    let product = build_product(model, controller);
    let ba = to_buchi(&Ltl::not(spec.clone()));
    let mut verdict =
        Verdict { spec: spec.to_string(), pass: true, counterexample: None, product_states: product.state_count(), buchi_states: ba.state_count };
    if options.deadlock == DeadlockPolicy::Fail {
        if let Some(cx) = deadlock_counterexample(&product) {
            verdict.pass = false;
            verdict.counterexample = Some(cx);
            return Ok(verdict);
        }
    }
    let g = combine(&product, &ba);
    if nested_dfs(&g) {
        let (stem, cycle) = shortest_lasso(&g).expect("accepting cycle found by nested search");
        verdict.pass = false;
        verdict.counterexample = Some(Counterexample { stem: to_steps(&product, &g, &stem), cycle: to_steps(&product, &g, &cycle) });
    }
    Ok(verdict)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LassoBounds {
    pub max_stem: usize,
    pub max_loop: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteVerdict {
    pub pass: bool,
    pub lassos_checked: usize,
    pub violation: Option<Counterexample>,
}

/// Enumerate every product lasso within the bounds and evaluate the spec on
/// its word directly. Independent of the automaton translation.
pub fn brute_force_check(model: &Model, controller: &Controller, spec: &Ltl, bounds: LassoBounds) -> Result<BruteVerdict, CheckError> {
    let product = build_product(model, controller);
    let mut checked = 0usize;
    // path of (state, edge index); states[i] is where move i starts.
    let mut path: Vec<(usize, usize)> = Vec::new();
    let mut found: Option<Counterexample> = None;
    let max_len = bounds.max_stem + bounds.max_loop;

    fn dfs(
        product: &Product,
        spec: &Ltl,
        bounds: LassoBounds,
        max_len: usize,
        state: usize,
        path: &mut Vec<(usize, usize)>,
        checked: &mut usize,
        found: &mut Option<Counterexample>,
    ) {
        if found.is_some() {
            return;
        }
        // Every earlier occurrence of `state` closes a lasso.
        let len = path.len();
        for k in 0..len {
            if path[k].0 == state && k <= bounds.max_stem && len - k <= bounds.max_loop {
                *checked += 1;
                let word = LassoWord {
                    stem: path[..k].iter().map(|&(s, e)| product.edges[s][e].label.clone()).collect(),
                    cycle: path[k..].iter().map(|&(s, e)| product.edges[s][e].label.clone()).collect(),
                };
                if !holds_on_lasso(spec, &word) {
                    let step = |&(s, e): &(usize, usize)| step_of(product, s, e);
                    *found = Some(Counterexample { stem: path[..k].iter().map(step).collect(), cycle: path[k..].iter().map(step).collect() });
                    return;
                }
            }
        }
        if len == max_len {
            return;
        }
        for ei in 0..product.edges[state].len() {
            path.push((state, ei));
            let to = product.edges[state][ei].to;
            dfs(product, spec, bounds, max_len, to, path, checked, found);
            path.pop();
            if found.is_some() {
                return;
            }
        }
    }

    dfs(&product, spec, bounds, max_len, 0, &mut path, &mut checked, &mut found);
    if checked == 0 {
        return Err(CheckError::BoundsTooSmall { max_stem: bounds.max_stem, max_loop: bounds.max_loop });
    }
    Ok(BruteVerdict { pass: found.is_none(), lassos_checked: checked, violation: found })
}
