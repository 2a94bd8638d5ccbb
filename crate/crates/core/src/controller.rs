//! Finite-state controllers: guarded transitions that emit action sets.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::formula::{normalize_atom, CondFormula, FormulaSyntaxError};

pub type StateId = String;

/// Set of action ids emitted on a transition; empty means no action (eps).
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionSet(pub BTreeSet<String>);

impl ActionSet {
    pub fn eps() -> Self {
        ActionSet(BTreeSet::new())
    }

    pub fn single(a: &str) -> Self {
        let mut s = BTreeSet::new();
        s.insert(normalize_atom(a));
        ActionSet(s)
    }

    pub fn from_iter<I: IntoIterator<Item = S>, S: AsRef<str>>(items: I) -> Self {
        ActionSet(items.into_iter().map(|a| normalize_atom(a.as_ref())).collect())
    }

    pub fn is_eps(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &String> {
        self.0.iter()
    }

    pub fn contains(&self, a: &str) -> bool {
        self.0.contains(a)
    }

    pub fn rename(&self, map: &dyn Fn(&str) -> String) -> ActionSet {
        ActionSet(self.0.iter().map(|a| map(a)).collect())
    }
}

impl fmt::Display for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("eps");
        }
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(a)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub from: StateId,
    pub cond: CondFormula,
    pub out: ActionSet,
    pub to: StateId,
}

impl Transition {
    pub fn new(from: &str, cond: CondFormula, out: ActionSet, to: &str) -> Self {
        Transition { from: from.to_string(), cond, out, to: to.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllerState {
    pub id: StateId,
    /// Step number this state was built from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Controller {
    pub props: BTreeSet<String>,
    pub actions: BTreeSet<String>,
    pub states: Vec<ControllerState>,
    pub initial: StateId,
    pub absorbing: StateId,
    pub transitions: Vec<Transition>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl ActionSet {
    /// Parse "eps" or a comma-separated list of action ids.
    pub fn parse(text: &str) -> ActionSet {
        let t = text.trim();
        if t.is_empty() || t == "eps" || t == "ε" {
            return ActionSet::eps();
        }
        ActionSet::from_iter(t.split(',').map(str::trim).filter(|s| !s.is_empty()))
    }
}

impl Controller {
    /// Controller from (from, guard, output, to) rows; states in order of
    /// first mention, vocabulary taken from the rows.
    pub fn from_edges(initial: &str, absorbing: &str, rows: &[(&str, &str, &str, &str)]) -> Result<Controller, FormulaSyntaxError> {
        let mut states: Vec<ControllerState> = Vec::new();
        let add = |id: &str, states: &mut Vec<ControllerState>| {
            if !states.iter().any(|s| s.id == id) {
                states.push(ControllerState { id: id.to_string(), step: None });
            }
        };
        add(initial, &mut states);
        let mut transitions = Vec::new();
        for (from, cond, out, to) in rows {
            add(from, &mut states);
            add(to, &mut states);
            transitions.push(Transition::new(from, cond.parse()?, ActionSet::parse(out), to));
        }
        add(absorbing, &mut states);
        let mut c = Controller {
            props: BTreeSet::new(),
            actions: BTreeSet::new(),
            states,
            initial: initial.to_string(),
            absorbing: absorbing.to_string(),
            transitions,
        };
        let (props, actions) = c.used_vocabulary();
        c.props = props;
        c.actions = actions;
        Ok(c)
    }

    pub fn state_ids(&self) -> impl Iterator<Item = &StateId> {
        self.states.iter().map(|s| &s.id)
    }

    pub fn has_state(&self, id: &str) -> bool {
        self.states.iter().any(|s| s.id == id)
    }

    pub fn outgoing<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions.iter().filter(move |t| t.from == id)
    }

    /// Inputs the controller observes at a model state: labels restricted to
    /// the controller's own propositions.
    pub fn observe(&self, labels: &BTreeSet<String>) -> BTreeSet<String> {
        labels.intersection(&self.props).cloned().collect()
    }

    /// Transitions enabled from `state` under the observed inputs.
    pub fn enabled<'a>(&'a self, state: &'a str, inputs: &'a BTreeSet<String>) -> impl Iterator<Item = &'a Transition> + 'a {
        self.outgoing(state).filter(move |t| t.cond.eval(inputs))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut errors = Vec::new();
        let ids: BTreeSet<&str> = self.states.iter().map(|s| s.id.as_str()).collect();
        if ids.len() != self.states.len() {
            errors.push("duplicate state id".to_string());
        }
        if !ids.contains(self.initial.as_str()) {
            errors.push(format!("initial state {} is not declared", self.initial));
        }
        if !ids.contains(self.absorbing.as_str()) {
            errors.push(format!("absorbing state {} is not declared", self.absorbing));
        }
        for t in &self.transitions {
            if !ids.contains(t.from.as_str()) || !ids.contains(t.to.as_str()) {
                errors.push(format!("transition {} -> {} uses an undeclared state", t.from, t.to));
            }
            for a in t.cond.atoms() {
                if !self.props.contains(&a) {
                    errors.push(format!("condition proposition '{}' is not declared", a));
                }
            }
            for a in t.out.iter() {
                if !self.actions.contains(a) {
                    errors.push(format!("action '{}' is not declared", a));
                }
            }
        }
        let abs: Vec<&Transition> = self.outgoing(&self.absorbing).collect();
        let ok_abs = !abs.is_empty()
            && abs.iter().all(|t| t.to == self.absorbing && t.out.is_eps())
            && CondFormula::or(abs.iter().map(|t| t.cond.clone()).collect()).is_valid();
        if !ok_abs {
            errors.push("absorbing state must only loop on (true, eps)".to_string());
        }
        for s in &self.states {
            if s.id != self.absorbing && self.outgoing(&s.id).next().is_none() {
                errors.push(format!("state {} has no outgoing transition", s.id));
            }
        }
        ValidationReport { errors }
    }

    /// Merge transitions sharing (from, out, to) by disjoining their guards.
    pub fn merge_parallel(&mut self) {
        let mut order: Vec<(StateId, ActionSet, StateId)> = Vec::new();
        let mut conds: BTreeMap<(StateId, ActionSet, StateId), Vec<CondFormula>> = BTreeMap::new();
        for t in self.transitions.drain(..) {
            let key = (t.from, t.out, t.to);
            if !conds.contains_key(&key) {
                order.push(key.clone());
            }
            conds.entry(key).or_default().push(t.cond);
        }
        for key in order {
            let parts = conds.remove(&key).unwrap();
            let cond = if parts.len() == 1 {
                parts.into_iter().next().unwrap()
            } else {
                let merged = CondFormula::or(parts);
                if merged.is_valid() {
                    CondFormula::True
                } else {
                    merged
                }
            };
            self.transitions.push(Transition { from: key.0, cond, out: key.1, to: key.2 });
        }
    }

    /// Rename propositions and actions (used after synonym consolidation).
    pub fn rename(&self, map: &dyn Fn(&str) -> String) -> Controller {
        let mut c = Controller {
            props: self.props.iter().map(|p| map(p)).collect(),
            actions: self.actions.iter().map(|a| map(a)).collect(),
            states: self.states.clone(),
            initial: self.initial.clone(),
            absorbing: self.absorbing.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| Transition { from: t.from.clone(), cond: t.cond.rename(map), out: t.out.rename(map), to: t.to.clone() })
                .collect(),
        };
        c.merge_parallel();
        c
    }

    pub fn rename_states(&self, map: &dyn Fn(&str) -> String) -> Controller {
        Controller {
            props: self.props.clone(),
            actions: self.actions.clone(),
            states: self.states.iter().map(|s| ControllerState { id: map(&s.id), step: s.step.clone() }).collect(),
            initial: map(&self.initial),
            absorbing: map(&self.absorbing),
            transitions: self
                .transitions
                .iter()
                .map(|t| Transition { from: map(&t.from), cond: t.cond.clone(), out: t.out.clone(), to: map(&t.to) })
                .collect(),
        }
    }

    /// Propositions and actions actually referenced by transitions.
    pub fn used_vocabulary(&self) -> (BTreeSet<String>, BTreeSet<String>) {
        let mut props = BTreeSet::new();
        let mut acts = BTreeSet::new();
        for t in &self.transitions {
            props.extend(t.cond.atoms());
            acts.extend(t.out.iter().cloned());
        }
        (props, acts)
    }
}
