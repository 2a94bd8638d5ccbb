//! LTL to Büchi automata by tableau expansion.
//!
//! Obligation sets ("what must hold from the next step on") are the states
//! of a transition-based generalized automaton; one acceptance set per
//! until-subformula. A level counter then yields a plain Büchi automaton.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::formula::CondFormula;
use crate::ltl::{Ltl, Nnf};

/// Conjunction of literals guarding a transition.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Guard {
    pub pos: BTreeSet<String>,
    pub neg: BTreeSet<String>,
}

impl Guard {
    pub fn allows(&self, letter: &BTreeSet<String>) -> bool {
        self.pos.iter().all(|a| letter.contains(a)) && !self.neg.iter().any(|a| letter.contains(a))
    }

    pub fn to_formula(&self) -> CondFormula {
        let mut parts: Vec<CondFormula> = self.pos.iter().map(|a| CondFormula::Atom(a.clone())).collect();
        parts.extend(self.neg.iter().map(|a| CondFormula::not(CondFormula::Atom(a.clone()))));
        CondFormula::and(parts)
    }
}

#[derive(Clone, Debug)]
pub struct BuchiAutomaton {
    pub state_count: usize,
    pub initial: usize,
    /// Outgoing edges per state: (guard, target).
    pub edges: Vec<Vec<(Guard, usize)>>,
    pub accepting: Vec<bool>,
}

impl BuchiAutomaton {
    /// Does the automaton accept the lasso word? Used in tests.
    pub fn accepts_lasso(&self, stem: &[BTreeSet<String>], cycle: &[BTreeSet<String>]) -> bool {
        // Product of the automaton with the lasso positions, then look for an
        // accepting node that lies on a cycle.
        let n = stem.len() + cycle.len();
        let letter = |i: usize| if i < stem.len() { &stem[i] } else { &cycle[i - stem.len()] };
        let succ_pos = |i: usize| if i + 1 < n { i + 1 } else { stem.len() };
        let idx = |q: usize, i: usize| q * n + i;
        let total = self.state_count * n;
        let mut adj: Vec<Vec<usize>> = alloc::vec![Vec::new(); total];
        for q in 0..self.state_count {
            for i in 0..n {
                for (g, t) in &self.edges[q] {
                    if g.allows(letter(i)) {
                        adj[idx(q, i)].push(idx(*t, succ_pos(i)));
                    }
                }
            }
        }
        let reach = reachable(&adj, &[idx(self.initial, 0)]);
        for q in 0..self.state_count {
            if !self.accepting[q] {
                continue;
            }
            for i in 0..n {
                let v = idx(q, i);
                if reach[v] {
                    let from_v = reachable(&adj, &adj[v]);
                    if from_v[v] {
                        return true;
                    }
                }
            }
        }
        false
    }
}

fn reachable(adj: &[Vec<usize>], start: &[usize]) -> Vec<bool> {
    let mut seen = alloc::vec![false; adj.len()];
    let mut stack: Vec<usize> = start.to_vec();
    while let Some(v) = stack.pop() {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        stack.extend(adj[v].iter().copied());
    }
    seen
}

#[derive(Clone, Debug)]
struct Node {
    old: BTreeSet<Nnf>,
    next: BTreeSet<Nnf>,
}

fn expand(mut todo: Vec<Nnf>, mut old: BTreeSet<Nnf>, next: BTreeSet<Nnf>, out: &mut Vec<Node>) {
    let eta = match todo.pop() {
        None => {
            out.push(Node { old, next });
            return;
        }
        Some(e) => e,
    };
    if old.contains(&eta) {
        expand(todo, old, next, out);
        return;
    }
    match &eta {
        Nnf::False => {}
        Nnf::True => {
            old.insert(eta);
            expand(todo, old, next, out);
        }
        Nnf::Lit(a, pol) => {
            if old.contains(&Nnf::Lit(a.clone(), !pol)) {
                return;
            }
            old.insert(eta);
            expand(todo, old, next, out);
        }
        Nnf::And(x, y) => {
            let (x, y) = ((**x).clone(), (**y).clone());
            old.insert(eta);
            todo.push(x);
            todo.push(y);
            expand(todo, old, next, out);
        }
        Nnf::Or(x, y) => {
            let (x, y) = ((**x).clone(), (**y).clone());
            old.insert(eta);
            let mut t1 = todo.clone();
            t1.push(x);
            expand(t1, old.clone(), next.clone(), out);
            todo.push(y);
            expand(todo, old, next, out);
        }
        Nnf::Next(x) => {
            let x = (**x).clone();
            old.insert(eta);
            let mut next = next;
            next.insert(x);
            expand(todo, old, next, out);
        }
        Nnf::Until(x, y) => {
            let (x, y) = ((**x).clone(), (**y).clone());
            old.insert(eta.clone());
            let mut t1 = todo.clone();
            t1.push(x);
            let mut n1 = next.clone();
            n1.insert(eta);
            expand(t1, old.clone(), n1, out);
            todo.push(y);
            expand(todo, old, next, out);
        }
        Nnf::Release(x, y) => {
            let (x, y) = ((**x).clone(), (**y).clone());
            old.insert(eta.clone());
            let mut t1 = todo.clone();
            t1.push(y.clone());
            let mut n1 = next.clone();
            n1.insert(eta);
            expand(t1, old.clone(), n1, out);
            todo.push(x);
            todo.push(y);
            expand(todo, old, next, out);
        }
    }
}

fn untils(f: &Nnf, out: &mut BTreeSet<Nnf>) {
    match f {
        Nnf::True | Nnf::False | Nnf::Lit(..) => {}
        Nnf::Next(x) => untils(x, out),
        Nnf::And(x, y) | Nnf::Or(x, y) | Nnf::Release(x, y) => {
            untils(x, out);
            untils(y, out);
        }
        Nnf::Until(x, y) => {
            out.insert(f.clone());
            untils(x, out);
            untils(y, out);
        }
    }
}

fn guard_of(node: &Node) -> Guard {
    let mut g = Guard::default();
    for f in &node.old {
        if let Nnf::Lit(a, pol) = f {
            if *pol {
                g.pos.insert(a.clone());
            } else {
                g.neg.insert(a.clone());
            }
        }
    }
    g
}

/// Translate an LTL formula into a Büchi automaton accepting exactly its models.
pub fn to_buchi(formula: &Ltl) -> BuchiAutomaton {
    let root = formula.nnf();
    let mut us = BTreeSet::new();
    untils(&root, &mut us);
    let us: Vec<Nnf> = us.into_iter().collect();
    let k = us.len();

    // Generalized automaton over obligation sets.
    let mut sets: Vec<BTreeSet<Nnf>> = Vec::new();
    let mut set_index: BTreeMap<BTreeSet<Nnf>, usize> = BTreeMap::new();
    // Per obligation set: (guard, target set, acceptance membership per until).
    let mut gedges: Vec<Vec<(Guard, usize, Vec<bool>)>> = Vec::new();
    let mut init = BTreeSet::new();
    init.insert(root);
    sets.push(init.clone());
    set_index.insert(init, 0);
    let mut i = 0;
    while i < sets.len() {
        let mut nodes = Vec::new();
        expand(sets[i].iter().cloned().collect(), BTreeSet::new(), BTreeSet::new(), &mut nodes);
        let mut edges = Vec::new();
        for n in nodes {
            let target = match set_index.get(&n.next) {
                Some(&t) => t,
                None => {
                    sets.push(n.next.clone());
                    set_index.insert(n.next.clone(), sets.len() - 1);
                    sets.len() - 1
                }
            };
            let acc: Vec<bool> = us
                .iter()
                .map(|u| match u {
                    Nnf::Until(_, y) => n.old.contains(y) || !n.old.contains(u),
                    _ => unreachable!(),
                })
                .collect();
            let e = (guard_of(&n), target, acc);
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
        gedges.push(edges);
        i += 1;
    }

    // Degeneralize with a level counter 0..=k; level k is accepting.
    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut states: Vec<(usize, usize)> = alloc::vec![(0, 0)];
    index.insert((0, 0), 0);
    let mut edges: Vec<Vec<(Guard, usize)>> = Vec::new();
    let mut j = 0;
    while j < states.len() {
        let (s, level) = states[j];
        let mut out = Vec::new();
        for (g, t, acc) in &gedges[s] {
            let mut l = if level == k { 0 } else { level };
            while l < k && acc[l] {
                l += 1;
            }
            let key = (*t, l);
            let id = match index.get(&key) {
                Some(&id) => id,
                None => {
                    states.push(key);
                    index.insert(key, states.len() - 1);
                    states.len() - 1
                }
            };
            let e = (g.clone(), id);
            if !out.contains(&e) {
                out.push(e);
            }
        }
        edges.push(out);
        j += 1;
    }
    let accepting = states.iter().map(|&(_, l)| l == k).collect();
    BuchiAutomaton { state_count: states.len(), initial: 0, edges, accepting }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn always_p_is_one_state() {
        let b = to_buchi(&"G p".parse().unwrap());
        assert_eq!(b.state_count, 1);
        assert!(b.accepting[0]);
        assert_eq!(b.edges[0].len(), 1);
        assert!(b.edges[0][0].0.pos.contains("p"));
    }

    #[test]
    fn eventually_goal_is_two_states() {
        let b = to_buchi(&"F goal".parse().unwrap());
        assert_eq!(b.state_count, 2);
        assert!(!b.accepting[0]);
        assert!(b.accepting[1]);
        let into_sink: Vec<_> = b.edges[0].iter().filter(|(_, t)| *t == 1).collect();
        assert_eq!(into_sink.len(), 1);
        assert!(into_sink[0].0.pos.contains("goal"));
    }
}
