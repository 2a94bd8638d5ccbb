//! Random instance generators and oracle runs shared by the oracle tests
//! and the acceptance target.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taskfsa_core::buchi::to_buchi;
use taskfsa_core::ltl::{holds_on_lasso, LassoWord};
use taskfsa_core::{
    brute_force_check, check, ActionSet, CheckOptions, CondFormula, Controller, ControllerState, Counterexample, LassoBounds, Ltl, Model,
    ModelTransition, Transition,
};

pub const LABELS: [&str; 2] = ["a", "b"];
pub const ACTIONS: [&str; 2] = ["x", "y"];

pub fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn random_cond(rng: &mut ChaCha8Rng, atoms: &[&str]) -> CondFormula {
    match rng.gen_range(0..5) {
        0 => CondFormula::True,
        1 | 2 => {
            let a = CondFormula::atom(atoms.choose(rng).unwrap());
            if rng.gen_bool(0.5) {
                CondFormula::not(a)
            } else {
                a
            }
        }
        3 => CondFormula::and2(CondFormula::atom(atoms[0]), CondFormula::not(CondFormula::atom(atoms[1]))),
        _ => CondFormula::or2(CondFormula::atom(atoms[0]), CondFormula::atom(atoms[1])),
    }
}

pub fn random_model(rng: &mut ChaCha8Rng, n: usize) -> Model {
    let states: Vec<String> = (0..n).map(|i| format!("p{}", i)).collect();
    let mut labels = BTreeMap::new();
    for s in &states {
        let l: BTreeSet<String> = ["a", "b", "goal"].iter().filter(|_| rng.gen_bool(0.4)).map(|x| x.to_string()).collect();
        labels.insert(s.clone(), l);
    }
    // Each state splits on a guard; a few get an extra nondeterministic move.
    let mut transitions = Vec::new();
    for s in &states {
        let guard = random_cond(rng, &["x", "eps"]);
        transitions.push(ModelTransition { from: s.clone(), guard: guard.negate(), to: states.choose(rng).unwrap().clone() });
        transitions.push(ModelTransition { from: s.clone(), guard, to: states.choose(rng).unwrap().clone() });
        if rng.gen_bool(0.2) {
            let guard = random_cond(rng, &["x", "y"]);
            transitions.push(ModelTransition { from: s.clone(), guard, to: states.choose(rng).unwrap().clone() });
        }
    }
    Model {
        action_props: set(&ACTIONS),
        label_props: set(&["a", "b", "goal"]),
        states: states.clone(),
        initial: states[0].clone(),
        transitions,
        labels,
        surface: BTreeMap::new(),
    }
}

pub fn random_controller(rng: &mut ChaCha8Rng, n: usize) -> Controller {
    let ids: Vec<String> = (0..n).map(|i| format!("q{}", i)).collect();
    let outs = [ActionSet::eps(), ActionSet::single("x"), ActionSet::single("y"), ActionSet::from_iter(["x", "y"])];
    let mut transitions = Vec::new();
    for id in &ids[..n - 1] {
        let cond = random_cond(rng, &LABELS);
        transitions.push(Transition::new(id, cond.negate(), outs.choose(rng).unwrap().clone(), ids.choose(rng).unwrap()));
        if rng.gen_bool(0.2) {
            let cond = random_cond(rng, &LABELS);
            transitions.push(Transition::new(id, cond.clone(), outs.choose(rng).unwrap().clone(), ids.choose(rng).unwrap()));
        }
        transitions.push(Transition::new(id, cond, outs.choose(rng).unwrap().clone(), ids.choose(rng).unwrap()));
    }
    let last = &ids[n - 1];
    transitions.push(Transition::new(last, CondFormula::True, ActionSet::eps(), last));
    Controller {
        props: set(&LABELS),
        actions: set(&ACTIONS),
        states: ids.iter().map(|id| ControllerState { id: id.clone(), step: None }).collect(),
        initial: ids[0].clone(),
        absorbing: last.clone(),
        transitions,
    }
}

pub fn random_ltl(rng: &mut ChaCha8Rng, atoms: &[&str], budget: usize) -> Ltl {
    if budget <= 1 {
        return Ltl::atom(atoms.choose(rng).unwrap());
    }
    match rng.gen_range(0..9) {
        0 => Ltl::not(random_ltl(rng, atoms, budget - 1)),
        1 => Ltl::next(random_ltl(rng, atoms, budget - 1)),
        2 => Ltl::eventually(random_ltl(rng, atoms, budget - 1)),
        3 => Ltl::always(random_ltl(rng, atoms, budget - 1)),
        k if budget >= 3 => {
            let left = rng.gen_range(1..budget - 1);
            let a = random_ltl(rng, atoms, left);
            let b = random_ltl(rng, atoms, budget - 1 - left);
            match k {
                4 => Ltl::and(a, b),
                5 => Ltl::or(a, b),
                6 => Ltl::implies(a, b),
                7 => Ltl::until(a, b),
                _ => Ltl::release(a, b),
            }
        }
        _ => Ltl::atom(atoms.choose(rng).unwrap()),
    }
}

/// Walk the counterexample through the model and controller and confirm
/// that every move is a legal closed-loop move.
pub fn replays(model: &Model, controller: &Controller, cx: &Counterexample) -> Result<(), String> {
    let steps: Vec<_> = cx.stem.iter().chain(cx.cycle.iter()).collect();
    if cx.cycle.is_empty() {
        return Err("empty cycle".into());
    }
    let first = steps[0];
    if first.model_state != model.initial || first.controller_state != controller.initial {
        return Err("does not start at the initial pair".into());
    }
    for (i, s) in steps.iter().enumerate() {
        let labels = model.labels_of(&s.model_state);
        let inputs = controller.observe(&labels);
        if inputs != s.inputs {
            return Err(format!("move {}: wrong inputs", i));
        }
        let mut want_label = labels.clone();
        want_label.extend(s.output.iter().cloned());
        if want_label != s.label {
            return Err(format!("move {}: wrong label", i));
        }
        let next = if i + 1 < steps.len() { steps[i + 1] } else { &cx.cycle[0] };
        if s.stuck {
            let any = controller.enabled(&s.controller_state, &inputs).any(|t| model.successors(&s.model_state, &t.out).next().is_some());
            if any || next.model_state != s.model_state || next.controller_state != s.controller_state {
                return Err(format!("move {}: bogus stutter", i));
            }
            continue;
        }
        let ok = controller.enabled(&s.controller_state, &inputs).any(|t| {
            t.out == s.output && t.to == next.controller_state && model.successors(&s.model_state, &t.out).any(|p| *p == next.model_state)
        });
        if !ok {
            return Err(format!("move {}: no such transition", i));
        }
    }
    Ok(())
}


pub fn random_letter(rng: &mut ChaCha8Rng, atoms: &[&str]) -> BTreeSet<String> {
    atoms.iter().filter(|_| rng.gen_bool(0.5)).map(|s| s.to_string()).collect()
}



#[derive(Debug, Default)]
pub struct Tally {
    pub instances: usize,
    pub fails: usize,
    pub passes: usize,
}

/// Compare `check` with bounded enumeration on one seeded instance per
/// seed; every counterexample must replay and violate its spec.
pub fn checker_agreement(seeds: std::ops::Range<u64>) -> Result<Tally, String> {
    let atoms = ["a", "b", "x", "goal"];
    let mut tally = Tally::default();
    for seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mn, cn) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let model = random_model(&mut rng, mn);
        let controller = random_controller(&mut rng, cn);
        let size = rng.gen_range(1..=6);
        let spec = random_ltl(&mut rng, &atoms, size);
        if spec.size() > 6 {
            return Err(format!("seed {}: spec {} too large", seed, spec));
        }
        let verdict = check(&model, &controller, &spec, CheckOptions::default()).map_err(|e| format!("seed {}: {}", seed, e))?;
        let n = verdict.product_states;
        let bounds = LassoBounds { max_stem: n, max_loop: n };
        let brute = brute_force_check(&model, &controller, &spec, bounds).map_err(|e| format!("seed {}: {}", seed, e))?;
        if verdict.pass != brute.pass {
            return Err(format!("seed {}: check says {}, enumeration says {} for {}", seed, verdict.pass, brute.pass, spec));
        }
        if let Some(cx) = &verdict.counterexample {
            replays(&model, &controller, cx).map_err(|e| format!("seed {}: {}", seed, e))?;
            if holds_on_lasso(&spec, &cx.word()) {
                return Err(format!("seed {}: counterexample satisfies {}", seed, spec));
            }
            tally.fails += 1;
        } else {
            tally.passes += 1;
        }
        tally.instances += 1;
    }
    Ok(tally)
}

fn words_of_length(atoms: &[&str], len: usize) -> Vec<Vec<BTreeSet<String>>> {
    let letters: Vec<BTreeSet<String>> = (0..1usize << atoms.len())
        .map(|m| atoms.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, a)| a.to_string()).collect())
        .collect();
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out.iter().flat_map(|w| letters.iter().map(move |l| {
            let mut w = w.clone();
            w.push(l.clone());
            w
        })).collect();
    }
    out
}

/// Every lasso with stem and loop up to `exhaustive`, then `sampled`
/// random lassos with stem and loop up to 4, per formula.
pub fn translation_agreement(formulas: u64, exhaustive: usize, sampled: usize) -> Result<usize, String> {
    let atoms = ["a", "b", "c"];
    let mut short = Vec::new();
    for s in 0..=exhaustive {
        for l in 1..=exhaustive {
            for stem in words_of_length(&atoms, s) {
                for cycle in words_of_length(&atoms, l) {
                    short.push((stem.clone(), cycle));
                }
            }
        }
    }
    let mut checked = 0;
    for seed in 0..formulas {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let size = rng.gen_range(1..=6);
        let f = random_ltl(&mut rng, &atoms, size);
        let ba = to_buchi(&f);
        let mut lassos = short.clone();
        for _ in 0..sampled {
            let stem: Vec<_> = (0..rng.gen_range(0..=4)).map(|_| random_letter(&mut rng, &atoms)).collect();
            let cycle: Vec<_> = (0..rng.gen_range(1..=4)).map(|_| random_letter(&mut rng, &atoms)).collect();
            lassos.push((stem, cycle));
        }
        for (stem, cycle) in lassos {
            let want = holds_on_lasso(&f, &LassoWord { stem: stem.clone(), cycle: cycle.clone() });
            if ba.accepts_lasso(&stem, &cycle) != want {
                return Err(format!("seed {}: {} on {:?} {:?}", seed, f, stem, cycle));
            }
            checked += 1;
        }
    }
    Ok(checked)
}
