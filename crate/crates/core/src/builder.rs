//! Turning parsed step lists into controllers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::controller::{ActionSet, Controller, ControllerState, StateId, Transition};
use crate::formula::CondFormula;
use crate::stepparse::{Keyword, ParseError, ParsedStep, Rule, StepParser};
use crate::steps::{StepNode, StepTree};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("step {step} refers to step [{target}], which does not exist")]
    DanglingStepRef { step: String, target: String },
    #[error("cannot splice substeps into state {state}: it leaves to several states")]
    AmbiguousSplice { state: StateId },
    #[error("unknown state {0}")]
    UnknownState(StateId),
    #[error("empty step list")]
    Empty,
}

/// What the builder did with one step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepTrace {
    pub step: String,
    pub rule: Rule,
    pub state: StateId,
    /// Set when the step was folded into another step's state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merged_into: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildTrace {
    pub steps: Vec<StepTrace>,
}

impl BuildTrace {
    pub fn state_of(&self, step: &str) -> Option<&StateId> {
        self.steps.iter().find(|s| s.step == step).map(|s| &s.state)
    }
}

pub fn state_name(step: &str) -> StateId {
    format!("q{}", step)
}

fn top_level(step: &str) -> Option<u64> {
    step.split('.').next()?.parse().ok()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum GroupKind {
    Single,
    /// Two complementary if-steps sharing one state.
    IfPair,
    /// An action-less wait followed by a plain step.
    WaitThen,
}

struct Group<'a> {
    kind: GroupKind,
    steps: Vec<&'a ParsedStep>,
    state: StateId,
}

fn is_if_step(s: &ParsedStep) -> bool {
    matches!(s.rule, Rule::Conditional | Rule::Direct) && s.has_keyword(Keyword::If) && s.else_branch.is_none()
}

fn group_steps(steps: &[ParsedStep]) -> Vec<Group<'_>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < steps.len() {
        let s = &steps[i];
        let state = state_name(&s.step_number);
        if let Some(n) = steps.get(i + 1) {
            if is_if_step(s) && is_if_step(n) && n.conds.equivalent(&s.conds.negate()) {
                out.push(Group { kind: GroupKind::IfPair, steps: alloc::vec![s, n], state });
                i += 2;
                continue;
            }
            if s.rule == Rule::SelfWait && s.acts.is_eps() && s.direct_target.is_none() && n.rule == Rule::Default && !n.acts.is_eps() {
                out.push(Group { kind: GroupKind::WaitThen, steps: alloc::vec![s, n], state });
                i += 2;
                continue;
            }
        }
        out.push(Group { kind: GroupKind::Single, steps: alloc::vec![s], state });
        i += 1;
    }
    out
}

struct Resolver<'a> {
    numbers: Vec<(&'a str, StateId)>,
    next_top: u64,
    absorbing: StateId,
}

impl Resolver<'_> {
    fn resolve(&self, from: &str, target: &str) -> Result<StateId, BuildError> {
        if let Some((_, s)) = self.numbers.iter().find(|(n, _)| *n == target) {
            return Ok(s.clone());
        }
        let prefix = format!("{}.", target);
        if let Some((_, s)) = self.numbers.iter().find(|(n, _)| n.starts_with(&prefix)) {
            return Ok(s.clone());
        }
        let mut t = target;
        while let Some(i) = t.rfind('.') {
            t = &t[..i];
            if let Some((_, s)) = self.numbers.iter().find(|(n, _)| *n == t) {
                return Ok(s.clone());
            }
        }
        if !target.contains('.') && target.parse::<u64>().ok() == Some(self.next_top) {
            return Ok(self.absorbing.clone());
        }
        Err(BuildError::DanglingStepRef { step: from.to_string(), target: target.to_string() })
    }
}

/// Edges of one branch of a conditional: "if g [wait for h], do a [and go to t]".
fn branch_edges(
    b: &ParsedStep,
    here: &str,
    next: &str,
    res: &Resolver,
    out: &mut Vec<Transition>,
) -> Result<(), BuildError> {
    let target = match &b.direct_target {
        Some(t) => res.resolve(&b.step_number, t)?,
        None => next.to_string(),
    };
    match &b.hold {
        Some(h) => {
            out.push(Transition::new(here, CondFormula::and2(b.conds.clone(), h.clone()), b.acts.clone(), &target));
            out.push(Transition::new(here, CondFormula::and2(b.conds.clone(), h.negate()), ActionSet::eps(), here));
        }
        None => out.push(Transition::new(here, b.conds.clone(), b.acts.clone(), &target)),
    }
    Ok(())
}

fn branches(s: &ParsedStep) -> Vec<&ParsedStep> {
    let mut v = alloc::vec![s];
    let mut cur = s;
    while let Some(e) = &cur.else_branch {
        v.push(e);
        cur = e;
    }
    v
}

/// Self-loop for the valuations no branch covers.
fn stay_otherwise(here: &str, guards: &[CondFormula], out: &mut Vec<Transition>) {
    let rest = CondFormula::or(guards.to_vec()).negate();
    if rest.is_satisfiable() {
        out.push(Transition::new(here, rest.simplify(), ActionSet::eps(), here));
    }
}

/// Controller for a flat step list. Each step (or merged pair of steps) gets
/// a state named after its number; a fresh absorbing state follows the last.
pub fn build_fsa(steps: &[ParsedStep]) -> Result<(Controller, BuildTrace), BuildError> {
    if steps.is_empty() {
        return Err(BuildError::Empty);
    }
    let groups = group_steps(steps);
    let last_top = top_level(&steps[steps.len() - 1].step_number).unwrap_or(steps.len() as u64);
    let absorbing = state_name(&format!("{}", last_top + 1));
    let mut numbers = Vec::new();
    for g in &groups {
        for s in &g.steps {
            numbers.push((s.step_number.as_str(), g.state.clone()));
        }
    }
    let res = Resolver { numbers, next_top: last_top + 1, absorbing: absorbing.clone() };

    let mut trace = BuildTrace::default();
    let mut transitions = Vec::new();
    let mut collapsible: BTreeSet<StateId> = BTreeSet::new();
    // Wait condition of the previous group, for discharging "once ..." guards.
    let mut prev_wait: Option<CondFormula> = None;
    for (gi, g) in groups.iter().enumerate() {
        let here = g.state.as_str();
        let next = groups.get(gi + 1).map(|n| n.state.clone()).unwrap_or_else(|| absorbing.clone());
        let mut edges = Vec::new();
        let mut notes = Vec::new();
        let first = g.steps[0];
        let mut wait = None;
        match g.kind {
            GroupKind::IfPair => {
                for s in &g.steps {
                    branch_edges(s, here, &next, &res, &mut edges)?;
                }
                notes.push(format!("merged complementary steps {} and {}", g.steps[0].step_number, g.steps[1].step_number));
                collapsible.insert(g.state.clone());
            }
            GroupKind::WaitThen => {
                let w = first.conds.clone();
                edges.push(Transition::new(here, w.clone(), g.steps[1].acts.clone(), &next));
                edges.push(Transition::new(here, w.negate(), ActionSet::eps(), here));
                notes.push(format!("wait fused with step {}", g.steps[1].step_number));
                wait = Some(w);
            }
            GroupKind::Single => match first.rule {
                Rule::Default => edges.push(Transition::new(here, CondFormula::True, first.acts.clone(), &next)),
                Rule::Direct => {
                    let target = match &first.direct_target {
                        Some(t) => res.resolve(&first.step_number, t)?,
                        None => next.clone(),
                    };
                    let discharged = first.has_keyword(Keyword::After)
                        && !first.has_keyword(Keyword::If)
                        && prev_wait.as_ref().is_some_and(|w| w.equivalent(&first.conds));
                    let cond = if discharged {
                        notes.push("precondition already established by the preceding wait".to_string());
                        CondFormula::True
                    } else {
                        first.conds.clone()
                    };
                    edges.push(Transition::new(here, cond, first.acts.clone(), &target));
                }
                Rule::Conditional => {
                    branch_edges(first, here, &next, &res, &mut edges)?;
                    edges.push(Transition::new(here, first.conds.negate(), ActionSet::eps(), here));
                }
                Rule::ConditionalElse => {
                    let bs = branches(first);
                    for b in &bs {
                        branch_edges(b, here, &next, &res, &mut edges)?;
                    }
                    let guards: Vec<CondFormula> = bs.iter().map(|b| b.conds.clone()).collect();
                    stay_otherwise(here, &guards, &mut edges);
                    collapsible.insert(g.state.clone());
                }
                Rule::SelfWait => {
                    let w = first.conds.clone();
                    edges.push(Transition::new(here, w.clone(), first.acts.clone(), &next));
                    edges.push(Transition::new(here, w.negate(), ActionSet::eps(), here));
                    wait = Some(w);
                }
                Rule::SelfUntil => {
                    let w = first.conds.clone();
                    edges.push(Transition::new(here, w.clone(), ActionSet::eps(), &next));
                    edges.push(Transition::new(here, w.negate(), first.acts.clone(), here));
                    wait = Some(w);
                }
            },
        }
        if g.kind == GroupKind::IfPair {
            let guards: Vec<CondFormula> = g.steps.iter().map(|s| s.conds.clone()).collect();
            stay_otherwise(here, &guards, &mut edges);
        }
        prev_wait = wait;
        for (k, s) in g.steps.iter().enumerate() {
            trace.steps.push(StepTrace {
                step: s.step_number.clone(),
                rule: s.rule,
                state: g.state.clone(),
                merged_into: if k > 0 { Some(first.step_number.clone()) } else { None },
                notes: if k == 0 { notes.clone() } else { Vec::new() },
            });
        }
        transitions.extend(edges);
    }
    transitions.push(Transition::new(&absorbing, CondFormula::True, ActionSet::eps(), &absorbing));

    let mut states: Vec<ControllerState> =
        groups.iter().map(|g| ControllerState { id: g.state.clone(), step: Some(g.steps[0].step_number.clone()) }).collect();
    states.push(ControllerState { id: absorbing.clone(), step: None });
    let mut c = Controller {
        props: BTreeSet::new(),
        actions: BTreeSet::new(),
        initial: states[0].id.clone(),
        absorbing,
        states,
        transitions,
    };
    c.merge_parallel();
    let redirects = elide_pass_through(&mut c, &collapsible);
    for st in &mut trace.steps {
        if let Some(t) = redirects.get(&st.state) {
            st.notes.push(format!("branches all lead to {}; state removed", t));
            st.state = t.clone();
        }
    }
    fill_vocabulary(&mut c);
    Ok((c, trace))
}

fn fill_vocabulary(c: &mut Controller) {
    let (props, acts) = c.used_vocabulary();
    c.props = props;
    c.actions = acts;
}

/// Remove branching states whose only move is (True, eps) to another
/// state, pointing their predecessors at the target instead.
fn elide_pass_through(c: &mut Controller, candidates: &BTreeSet<StateId>) -> BTreeMap<StateId, StateId> {
    let mut redirects: BTreeMap<StateId, StateId> = BTreeMap::new();
    loop {
        let mut found = None;
        for s in candidates {
            if redirects.contains_key(s) || !c.has_state(s) {
                continue;
            }
            let out: Vec<&Transition> = c.outgoing(s).collect();
            if out.len() == 1 && out[0].cond.is_valid() && out[0].out.is_eps() && out[0].to != *s {
                found = Some((s.clone(), out[0].to.clone()));
                break;
            }
        }
        let Some((s, t)) = found else { break };
        c.transitions.retain(|tr| tr.from != s);
        for tr in &mut c.transitions {
            if tr.to == s {
                tr.to = t.clone();
            }
        }
        c.states.retain(|st| st.id != s);
        if c.initial == s {
            c.initial = t.clone();
        }
        for v in redirects.values_mut() {
            if *v == s {
                *v = t.clone();
            }
        }
        redirects.insert(s, t);
    }
    c.merge_parallel();
    redirects
}

/// Parse and build a flat list of (number, text) steps.
pub fn build_from_texts(parser: &StepParser, steps: &[(String, String)]) -> Result<(Controller, BuildTrace), BuildError> {
    let parsed = steps.iter().map(|(n, t)| parser.parse_step(n, t)).collect::<Result<Vec<_>, _>>()?;
    build_fsa(&parsed)
}

/// Build from a chosen frontier of the step tree (e.g. all leaves).
pub fn build_frontier(parser: &StepParser, tree: &StepTree, frontier: &[String]) -> Result<(Controller, BuildTrace), BuildError> {
    build_from_texts(parser, &tree.texts(frontier))
}

/// Replace the single outgoing move of `state` with a detour through the
/// substep controller `child`, whose absorbing state hands back to where
/// `state` used to go (or to `return_to`).
pub fn splice_substeps(
    parent: &Controller,
    state: &str,
    child: &Controller,
    return_to: Option<&str>,
) -> Result<Controller, BuildError> {
    if !parent.has_state(state) {
        return Err(BuildError::UnknownState(state.to_string()));
    }
    let back = match return_to {
        Some(r) => r.to_string(),
        None => {
            let targets: BTreeSet<&StateId> = parent.outgoing(state).map(|t| &t.to).filter(|t| *t != state).collect();
            if targets.len() != 1 {
                return Err(BuildError::AmbiguousSplice { state: state.to_string() });
            }
            targets.into_iter().next().unwrap().clone()
        }
    };
    let taken: BTreeSet<StateId> = parent.state_ids().cloned().collect();
    let mut rename: BTreeMap<StateId, StateId> = BTreeMap::new();
    for s in child.state_ids() {
        if *s == child.absorbing {
            continue;
        }
        let mut id = s.clone();
        while taken.contains(&id) || rename.values().any(|v| *v == id) {
            id.push('\'');
        }
        rename.insert(s.clone(), id);
    }
    let map = |s: &StateId| -> StateId {
        if *s == child.absorbing {
            back.clone()
        } else {
            rename[s].clone()
        }
    };

    let mut out = parent.clone();
    out.transitions.retain(|t| t.from != state);
    out.transitions.push(Transition::new(state, CondFormula::True, ActionSet::eps(), &map(&child.initial)));
    for t in &child.transitions {
        if t.from == child.absorbing {
            continue;
        }
        out.transitions.push(Transition { from: map(&t.from), cond: t.cond.clone(), out: t.out.clone(), to: map(&t.to) });
    }
    let pos = out.states.iter().position(|s| s.id == state).unwrap();
    let inserted: Vec<ControllerState> = child
        .states
        .iter()
        .filter(|s| s.id != child.absorbing)
        .map(|s| ControllerState { id: map(&s.id), step: s.step.clone() })
        .collect();
    out.states.splice(pos + 1..pos + 1, inserted);
    out.merge_parallel();
    fill_vocabulary(&mut out);
    Ok(out)
}

/// Build the top level and splice every expanded step's substeps under its
/// state, recursively.
pub fn build_tree_spliced(parser: &StepParser, tree: &StepTree) -> Result<Controller, BuildError> {
    fn level(parser: &StepParser, nodes: &[StepNode]) -> Result<Controller, BuildError> {
        let texts: Vec<(String, String)> = nodes.iter().map(|n| (n.number.clone(), n.text.clone())).collect();
        let (mut c, trace) = build_from_texts(parser, &texts)?;
        for n in nodes {
            if n.children.is_empty() {
                continue;
            }
            let child = level(parser, &n.children)?;
            let st = trace.state_of(&n.number).cloned().unwrap_or_else(|| state_name(&n.number));
            c = splice_substeps(&c, &st, &child, None)?;
        }
        Ok(c)
    }
    level(parser, &tree.steps)
}

/// Two controllers joined under a fresh initial state that branches on `prop`.
pub fn merge_branches(prop: &str, when_true: &Controller, when_false: &Controller) -> Controller {
    let t = when_true.rename_states(&|s| format!("t.{}", s));
    let f = when_false.rename_states(&|s| format!("f.{}", s));
    let absorbing = "abs".to_string();
    let fix = |s: &StateId, c: &Controller| if *s == c.absorbing { absorbing.clone() } else { s.clone() };
    let mut states = alloc::vec![ControllerState { id: "q0".into(), step: None }];
    let mut transitions = alloc::vec![
        Transition::new("q0", CondFormula::atom(prop), ActionSet::eps(), &t.initial),
        Transition::new("q0", CondFormula::not(CondFormula::atom(prop)), ActionSet::eps(), &f.initial),
    ];
    for c in [&t, &f] {
        states.extend(c.states.iter().filter(|s| s.id != c.absorbing).cloned());
        transitions.extend(
            c.transitions
                .iter()
                .filter(|tr| tr.from != c.absorbing)
                .map(|tr| Transition { from: tr.from.clone(), cond: tr.cond.clone(), out: tr.out.clone(), to: fix(&tr.to, c) }),
        );
    }
    states.push(ControllerState { id: absorbing.clone(), step: None });
    transitions.push(Transition::new(&absorbing, CondFormula::True, ActionSet::eps(), &absorbing));
    let mut c = Controller { props: BTreeSet::new(), actions: BTreeSet::new(), states, initial: "q0".into(), absorbing, transitions };
    fill_vocabulary(&mut c);
    c
}
