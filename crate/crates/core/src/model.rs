//! Environment models: labeled transition systems driven by controller actions.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::controller::{ActionSet, StateId, ValidationReport};
use crate::formula::CondFormula;

/// Guard atom that holds when the controller emits no action.
pub const EPS: &str = "eps";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelTransition {
    pub from: StateId,
    pub guard: CondFormula,
    pub to: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub action_props: BTreeSet<String>,
    pub label_props: BTreeSet<String>,
    pub states: Vec<StateId>,
    pub initial: StateId,
    pub transitions: Vec<ModelTransition>,
    #[serde(default)]
    pub labels: BTreeMap<StateId, BTreeSet<String>>,
    /// Natural-language wording of phrases, used when asking about synonyms.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub surface: BTreeMap<String, String>,
}

impl Model {
    pub fn labels_of(&self, state: &str) -> BTreeSet<String> {
        self.labels.get(state).cloned().unwrap_or_default()
    }

    /// Atoms true for a guard when the controller emits `out`.
    pub fn action_valuation(out: &ActionSet) -> BTreeSet<String> {
        let mut v: BTreeSet<String> = out.0.clone();
        if out.is_eps() {
            v.insert(EPS.to_string());
        }
        v
    }

    /// Successor states of `state` under the emitted action set.
    pub fn successors<'a>(&'a self, state: &'a str, out: &ActionSet) -> impl Iterator<Item = &'a StateId> + 'a {
        let v = Self::action_valuation(out);
        self.transitions.iter().filter(move |t| t.from == state && t.guard.eval(&v)).map(|t| &t.to)
    }

    pub fn vocabulary(&self) -> BTreeSet<String> {
        self.action_props.union(&self.label_props).cloned().collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut errors = Vec::new();
        let ids: BTreeSet<&str> = self.states.iter().map(|s| s.as_str()).collect();
        if ids.len() != self.states.len() {
            errors.push("duplicate state id".to_string());
        }
        if !ids.contains(self.initial.as_str()) {
            errors.push(format!("initial state {} is not declared", self.initial));
        }
        for t in &self.transitions {
            if !ids.contains(t.from.as_str()) || !ids.contains(t.to.as_str()) {
                errors.push(format!("transition {} -> {} uses an undeclared state", t.from, t.to));
            }
            for a in t.guard.atoms() {
                if a != EPS && !self.action_props.contains(&a) {
                    errors.push(format!("guard proposition '{}' is not a declared action", a));
                }
            }
        }
        for (s, ls) in &self.labels {
            if !ids.contains(s.as_str()) {
                errors.push(format!("labels given for undeclared state {}", s));
            }
            for l in ls {
                if !self.label_props.contains(l) {
                    errors.push(format!("label '{}' on {} is not a declared label proposition", l, s));
                }
            }
        }
        for s in &self.states {
            if !self.transitions.iter().any(|t| &t.from == s && t.guard.is_satisfiable()) {
                errors.push(format!("state {} has no outgoing transition", s));
            }
        }
        ValidationReport { errors }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_guard_fires_only_without_action() {
        let m = Model {
            action_props: ["go"].iter().map(|s| s.to_string()).collect(),
            label_props: BTreeSet::new(),
            states: alloc::vec!["p0".into(), "p1".into()],
            initial: "p0".into(),
            transitions: alloc::vec![
                ModelTransition { from: "p0".into(), guard: CondFormula::atom(EPS), to: "p0".into() },
                ModelTransition { from: "p0".into(), guard: CondFormula::not(CondFormula::atom(EPS)), to: "p1".into() },
                ModelTransition { from: "p1".into(), guard: CondFormula::True, to: "p1".into() },
            ],
            labels: BTreeMap::new(),
            surface: BTreeMap::new(),
        };
        assert!(m.validate().ok());
        let a: Vec<_> = m.successors("p0", &ActionSet::eps()).collect();
        assert_eq!(a, alloc::vec!["p0"]);
        let b: Vec<_> = m.successors("p0", &ActionSet::single("go")).collect();
        assert_eq!(b, alloc::vec!["p1"]);
    }
}
