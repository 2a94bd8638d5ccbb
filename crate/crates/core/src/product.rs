//! Closed-loop product of an environment model and a controller.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::controller::{ActionSet, Controller, StateId};
use crate::model::Model;

/// What happens when no joint move exists from a product state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeadlockPolicy {
    /// Stay forever in the deadlocked state.
    #[default]
    Stutter,
    /// Report a violation whenever a deadlock is reachable.
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductEdge {
    pub to: usize,
    /// Propositions true at this step: model labels plus emitted actions.
    pub label: BTreeSet<String>,
    /// Controller inputs that enabled the move.
    pub inputs: BTreeSet<String>,
    pub out: ActionSet,
    /// Implicit self-loop added at a deadlock.
    pub stuck: bool,
}

#[derive(Clone, Debug)]
pub struct Product {
    /// (model state, controller state) per product state; index 0 is initial.
    pub states: Vec<(StateId, StateId)>,
    pub edges: Vec<Vec<ProductEdge>>,
}

impl Product {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn deadlocks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(move |&i| self.edges[i].iter().any(|e| e.stuck))
    }
}

/// Reachable product from the initial pair. Every product state gets at
/// least one outgoing edge: deadlocks receive a stuck self-loop.
pub fn build_product(model: &Model, controller: &Controller) -> Product {
    let mut index: BTreeMap<(StateId, StateId), usize> = BTreeMap::new();
    let mut states = Vec::new();
    let mut edges: Vec<Vec<ProductEdge>> = alloc::vec![Vec::new()];
    let start = (model.initial.clone(), controller.initial.clone());
    index.insert(start.clone(), 0);
    states.push(start);
    let mut queue = VecDeque::new();
    queue.push_back(0usize);
    while let Some(i) = queue.pop_front() {
        let (p, q) = states[i].clone();
        let labels = model.labels_of(&p);
        let inputs = controller.observe(&labels);
        let mut out: Vec<ProductEdge> = Vec::new();
        for t in controller.enabled(&q, &inputs) {
            let mut label = labels.clone();
            label.extend(t.out.iter().cloned());
            for p2 in model.successors(&p, &t.out) {
                let key = (p2.clone(), t.to.clone());
                let to = match index.get(&key) {
                    Some(&j) => j,
                    None => {
                        states.push(key.clone());
                        edges.push(Vec::new());
                        index.insert(key, states.len() - 1);
                        queue.push_back(states.len() - 1);
                        states.len() - 1
                    }
                };
                let e = ProductEdge { to, label: label.clone(), inputs: inputs.clone(), out: t.out.clone(), stuck: false };
                if !out.contains(&e) {
                    out.push(e);
                }
            }
        }
        if out.is_empty() {
            out.push(ProductEdge { to: i, label: labels.clone(), inputs, out: ActionSet::eps(), stuck: true });
        }
        edges[i] = out;
    }
    Product { states, edges }
}
