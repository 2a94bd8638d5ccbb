//! Structural comparison of controllers up to state renaming.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::controller::{Controller, Transition};

/// Find a state bijection under which both controllers have the same
/// transitions. Guards are compared by logical equivalence, action sets
/// exactly; initial and absorbing states must correspond.
pub fn find_isomorphism(a: &Controller, b: &Controller) -> Option<BTreeMap<String, String>> {
    if a.states.len() != b.states.len() || a.transitions.len() != b.transitions.len() {
        return None;
    }
    if a.used_vocabulary() != b.used_vocabulary() {
        return None;
    }
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut used: BTreeMap<String, String> = BTreeMap::new();
    map.insert(a.initial.clone(), b.initial.clone());
    used.insert(b.initial.clone(), a.initial.clone());
    if a.absorbing != a.initial {
        if b.absorbing == b.initial {
            return None;
        }
        map.insert(a.absorbing.clone(), b.absorbing.clone());
        used.insert(b.absorbing.clone(), a.absorbing.clone());
    } else if b.absorbing != b.initial {
        return None;
    }
    let order: Vec<String> = a.states.iter().map(|s| s.id.clone()).collect();
    if search(a, b, &order, &mut map, &mut used) {
        Some(map)
    } else {
        None
    }
}

pub fn isomorphic(a: &Controller, b: &Controller) -> bool {
    find_isomorphism(a, b).is_some()
}

fn search(
    a: &Controller,
    b: &Controller,
    order: &[String],
    map: &mut BTreeMap<String, String>,
    used: &mut BTreeMap<String, String>,
) -> bool {
    // Pick a mapped state whose edges are not yet fully checked, else an unmapped one.
    let next_unmapped = order.iter().find(|s| !map.contains_key(*s));
    if let Some(s) = next_unmapped {
        let candidates: Vec<String> = b.states.iter().map(|x| x.id.clone()).filter(|x| !used.contains_key(x)).collect();
        for c in candidates {
            map.insert(s.clone(), c.clone());
            used.insert(c.clone(), s.clone());
            if partial_consistent(a, b, map) && search(a, b, order, map, used) {
                return true;
            }
            map.remove(s);
            used.remove(&c);
        }
        return false;
    }
    full_match(a, b, map)
}

fn same_label(x: &Transition, y: &Transition) -> bool {
    x.out == y.out && x.cond.equivalent(&y.cond)
}

/// Edges between already-mapped states must have matching counterparts.
fn partial_consistent(a: &Controller, b: &Controller, map: &BTreeMap<String, String>) -> bool {
    for (sa, sb) in map {
        for (ta_to, tb_to) in map {
            let xs: Vec<&Transition> = a.transitions.iter().filter(|t| &t.from == sa && &t.to == ta_to).collect();
            let ys: Vec<&Transition> = b.transitions.iter().filter(|t| &t.from == sb && &t.to == tb_to).collect();
            if xs.len() != ys.len() || !bipartite(&xs, &ys) {
                return false;
            }
        }
    }
    true
}

fn full_match(a: &Controller, b: &Controller, map: &BTreeMap<String, String>) -> bool {
    partial_consistent(a, b, map)
}

/// Perfect matching between two small edge lists under `same_label`.
fn bipartite(xs: &[&Transition], ys: &[&Transition]) -> bool {
    fn go(i: usize, xs: &[&Transition], ys: &[&Transition], taken: &mut Vec<bool>) -> bool {
        if i == xs.len() {
            return true;
        }
        for j in 0..ys.len() {
            if !taken[j] && same_label(xs[i], ys[j]) {
                taken[j] = true;
                if go(i + 1, xs, ys, taken) {
                    return true;
                }
                taken[j] = false;
            }
        }
        false
    }
    let mut taken = alloc::vec![false; ys.len()];
    go(0, xs, ys, &mut taken)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{ActionSet, ControllerState};
    use crate::formula::CondFormula;
    use alloc::string::ToString;

    fn chain(names: &[&str], acts: &[&str]) -> Controller {
        let mut states: Vec<ControllerState> = names.iter().map(|n| ControllerState { id: n.to_string(), step: None }).collect();
        states.push(ControllerState { id: "abs".into(), step: None });
        let mut transitions = Vec::new();
        for (i, a) in acts.iter().enumerate() {
            let to = if i + 1 < names.len() { names[i + 1] } else { "abs" };
            transitions.push(Transition::new(names[i], CondFormula::True, ActionSet::single(a), to));
        }
        transitions.push(Transition::new("abs", CondFormula::True, ActionSet::eps(), "abs"));
        Controller {
            props: Default::default(),
            actions: acts.iter().map(|s| s.to_string()).collect(),
            states,
            initial: names[0].to_string(),
            absorbing: "abs".into(),
            transitions,
        }
    }

    #[test]
    fn renamed_chain_is_isomorphic() {
        let a = chain(&["q1", "q2"], &["x", "y"]);
        let b = chain(&["s7", "s3"], &["x", "y"]);
        assert!(isomorphic(&a, &b));
    }

    #[test]
    fn different_order_is_not() {
        let a = chain(&["q1", "q2"], &["x", "y"]);
        let b = chain(&["q1", "q2"], &["y", "x"]);
        assert!(!isomorphic(&a, &b));
    }

    #[test]
    fn equivalent_guards_match() {
        let mut a = chain(&["q1"], &["x"]);
        let mut b = a.clone();
        a.props.insert("c".into());
        b.props.insert("c".into());
        a.transitions[0].cond = "!(c & !c)".parse().unwrap();
        b.transitions[0].cond = CondFormula::True;
        // used vocabulary differs ("c" appears only in a)
        assert!(!isomorphic(&a, &b));
        b.transitions[0].cond = "c | !c".parse().unwrap();
        assert!(isomorphic(&a, &b));
    }
}
