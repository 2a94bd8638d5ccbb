use taskfsa_core::builder::{build_from_texts, build_tree_spliced, merge_branches, splice_substeps, BuildError};
use taskfsa_core::iso::isomorphic;
use taskfsa_core::stepparse::{Rule, StepParser};
use taskfsa_core::{Controller, StepNode, StepTree};

fn steps(list: &[(&str, &str)]) -> Vec<(String, String)> {
    list.iter().map(|(n, t)| (n.to_string(), t.to_string())).collect()
}

fn build(list: &[(&str, &str)]) -> Controller {
    let (c, trace) = build_from_texts(&StepParser::new(), &steps(list)).unwrap();
    assert!(c.validate().ok(), "{:?}", c.validate());
    assert_eq!(trace.steps.len(), list.len());
    c
}

fn edges(initial: &str, absorbing: &str, rows: &[(&str, &str, &str, &str)]) -> Controller {
    Controller::from_edges(initial, absorbing, rows).unwrap()
}

const CROSS: [(&str, &str); 3] = [
    ("1", "Look both ways before crossing the road."),
    ("2", "If there are no cars coming, proceed to cross the road."),
    ("3", "If there are cars coming, wait for them to pass before crossing the road."),
];

const AT_LIGHT: [(&str, &str); 4] = [
    ("1", "Locate the traffic light."),
    ("2", "Wait for the traffic light to turn green."),
    ("3", "Look both ways before crossing the road."),
    ("4", "Cross the road if no cars are coming."),
];

fn light_branch() -> Controller {
    edges(
        "q1",
        "q4",
        &[
            ("q1", "true", "locate traffic light", "q2"),
            ("q2", "!turn green", "eps", "q2"),
            ("q2", "turn green", "look way", "q3"),
            ("q3", "car come", "eps", "q3"),
            ("q3", "!car come", "cross road", "q4"),
            ("q4", "true", "eps", "q4"),
        ],
    )
}

fn plain_branch() -> Controller {
    edges(
        "q1",
        "q3",
        &[
            ("q1", "true", "look way", "q2"),
            ("q2", "!car come | car pass", "cross road", "q3"),
            ("q2", "car come & !car pass", "eps", "q2"),
            ("q3", "true", "eps", "q3"),
        ],
    )
}

#[test]
fn single_step() {
    let c = build(&[("1", "Dial the number.")]);
    assert_eq!(c.states.len(), 2);
    let want = edges("q1", "q2", &[("q1", "true", "dial number", "q2"), ("q2", "true", "eps", "q2")]);
    assert!(isomorphic(&c, &want));
}

#[test]
fn traffic_light_branch() {
    let c = build(&AT_LIGHT);
    assert_eq!(c.states.len(), 4);
    assert!(isomorphic(&c, &light_branch()));
}

#[test]
fn no_light_branch_merges_complementary_steps() {
    let c = build(&CROSS);
    assert_eq!(c.states.len(), 3);
    assert!(isomorphic(&c, &plain_branch()));
}

#[test]
fn two_scenarios_joined() {
    let top = build(&CROSS);
    let bottom = build(&AT_LIGHT);
    let c = merge_branches("traffic light", &bottom, &top);
    assert!(c.validate().ok());
    assert_eq!(c.states.len(), 7);
    let want = edges(
        "q0",
        "q3",
        &[
            ("q0", "!traffic light", "eps", "q11"),
            ("q0", "traffic light", "eps", "q21"),
            ("q11", "true", "look way", "q12"),
            ("q12", "!car come | car pass", "cross road", "q3"),
            ("q12", "car come & !car pass", "eps", "q12"),
            ("q21", "true", "locate traffic light", "q22"),
            ("q22", "!turn green", "eps", "q22"),
            ("q22", "turn green", "look way", "q23"),
            ("q23", "car come", "eps", "q23"),
            ("q23", "!car come", "cross road", "q3"),
            ("q3", "true", "eps", "q3"),
        ],
    );
    assert!(isomorphic(&c, &want));
}

const SECOND_LAYER: [(&str, &str); 9] = [
    ("1.1", "Face the direction you want to cross the road in."),
    ("1.2", "Look to the left."),
    ("1.3", "Look to the right."),
    ("1.4", "If there are no cars coming, go to [2]. If there are cars coming, go to [3]."),
    ("2.1", "Walk across the road."),
    ("2.2", "Once you have reached the other side, look both ways again to make sure no cars are coming."),
    ("2.3", "If there are no cars coming, proceed to [4]. If there are cars coming, back to [1]."),
    ("3.1", "Wait for the cars to pass."),
    ("3.2", "Once the cars have passed, back to [2]."),
];

#[test]
fn second_layer_flat() {
    let c = build(&SECOND_LAYER);
    assert_eq!(c.states.len(), 10);
    let c = c.rename(&|p| if p == "walk across road" { "cross road".into() } else { p.into() });
    let want = edges(
        "q11",
        "q4",
        &[
            ("q11", "true", "face direction", "q12"),
            ("q12", "true", "look left", "q13"),
            ("q13", "true", "look right", "q14"),
            ("q14", "!car come", "eps", "q21"),
            ("q14", "car come", "eps", "q31"),
            ("q21", "true", "cross road", "q22"),
            ("q22", "true", "look way", "q23"),
            ("q23", "car come", "eps", "q11"),
            ("q23", "!car come", "eps", "q4"),
            ("q31", "!pass", "eps", "q31"),
            ("q31", "pass", "eps", "q32"),
            ("q32", "true", "eps", "q21"),
            ("q4", "true", "eps", "q4"),
        ],
    );
    assert!(isomorphic(&c, &want));
}

#[test]
fn collapsed_frontier_elides_pass_through_state() {
    let c = build(&[
        ("1.1", SECOND_LAYER[0].1),
        ("1.2", SECOND_LAYER[1].1),
        ("1.3", SECOND_LAYER[2].1),
        ("1.4", SECOND_LAYER[3].1),
        ("2", CROSS[1].1),
        ("3", CROSS[2].1),
    ]);
    let want = edges(
        "q1",
        "q3",
        &[
            ("q1", "true", "face direction", "q11"),
            ("q11", "true", "look left", "q12"),
            ("q12", "true", "look right", "q2"),
            ("q2", "!car come | car pass", "cross road", "q3"),
            ("q2", "car come & !car pass", "eps", "q2"),
            ("q3", "true", "eps", "q3"),
        ],
    );
    assert_eq!(c.states.len(), 5);
    assert!(isomorphic(&c, &want));
}

fn tree(task: &str, nodes: &[(&str, &str)]) -> StepTree {
    let mut t = StepTree::new(task);
    for (n, text) in nodes {
        let node = StepNode::new(n, text);
        match taskfsa_core::steps::parent_number(n) {
            None => t.steps.push(node),
            Some(p) => t.find_mut(p).unwrap().children.push(node),
        }
    }
    t.validate().unwrap();
    t
}

#[test]
fn dental_hierarchy() {
    let t = tree(
        "dentist",
        &[
            ("1", "Research local dental clinics"),
            ("2", "Read patient reviews"),
            ("3", "Compare services and prices"),
            ("4", "Schedule an appointment"),
            ("1.1", "Online search for local dental clinics"),
            ("1.2", "Gather recommendations from acquaintances"),
            ("1.3", "Check insurance provider's in-network list"),
            ("1.3.1", "Get insurance provider's contact information"),
            ("1.3.2", "Call the insurance provider's customer service"),
            ("1.3.3", "Request a list of in-network dental clinics"),
        ],
    );
    let c = build_tree_spliced(&StepParser::new(), &t).unwrap();
    assert!(c.validate().ok());
    assert_eq!(c.states.len(), 11);
    let want = edges(
        "q1",
        "q5",
        &[
            ("q1", "true", "eps", "q11"),
            ("q11", "true", "search local dental clinic", "q12"),
            ("q12", "true", "gather recommendation", "q13"),
            ("q13", "true", "eps", "q131"),
            ("q131", "true", "get insurance provider contact information", "q132"),
            ("q132", "true", "call insurance provider customer service", "q133"),
            ("q133", "true", "request list", "q2"),
            ("q2", "true", "read patient review", "q3"),
            ("q3", "true", "compare service price", "q4"),
            ("q4", "true", "schedule appointment", "q5"),
            ("q5", "true", "eps", "q5"),
        ],
    );
    assert!(isomorphic(&c, &want));
}

#[test]
fn mpc_selected_expansion() {
    let t = tree(
        "mpc",
        &[
            ("1", "Define problem and inputs."),
            ("2", "Secret sharing of inputs."),
            ("3", "Compute secret shares."),
            ("4", "Reconstruct the final result."),
            ("5", "Output verification."),
            ("6", "Decrypt the final result."),
            ("2.1", "Generate random secret shares."),
            ("2.2", "Securely store secret shares."),
            ("3.1", "Encrypt secret share."),
            ("3.2", "Distribute encrypted shares."),
            ("3.3", "Compute ciphertext."),
            ("3.4", "Broadcast result."),
        ],
    );
    let c = build_tree_spliced(&StepParser::new(), &t).unwrap();
    assert_eq!(c.states.len(), 13);
    assert!(c.validate().ok());
}

#[test]
fn splice_single_step_child() {
    let parent = build(&[("1", "Dial the number."), ("2", "Wait for the call to connect.")]);
    let child = build(&[("1", "Pick up the phone.")]);
    let c = splice_substeps(&parent, "q1", &child, None).unwrap();
    assert_eq!(c.states.len(), parent.states.len() + 1);
    assert!(c.validate().ok());
    assert!(c.actions.contains("pick up phone"));
}

#[test]
fn splice_rejects_branching_state() {
    let parent = build(&SECOND_LAYER);
    let child = build(&[("1", "Dial the number.")]);
    let err = splice_substeps(&parent, "q1.4", &child, None).unwrap_err();
    assert!(matches!(err, BuildError::AmbiguousSplice { .. }));
}

#[test]
fn dangling_reference() {
    let err = build_from_texts(&StepParser::new(), &steps(&[("1", "Dial the number."), ("2", "Go to [7].")])).unwrap_err();
    assert!(matches!(err, BuildError::DanglingStepRef { .. }), "{:?}", err);
}

#[test]
fn until_rule_repeats_action() {
    let c = build(&[("1", "[stay] [until] [car pass]")]);
    let want = edges(
        "q1",
        "q2",
        &[("q1", "!car pass", "stay", "q1"), ("q1", "car pass", "eps", "q2"), ("q2", "true", "eps", "q2")],
    );
    assert!(isomorphic(&c, &want));
}

#[test]
fn trace_records_rules() {
    let (_, trace) = build_from_texts(&StepParser::new(), &steps(&AT_LIGHT)).unwrap();
    let rules: Vec<Rule> = trace.steps.iter().map(|s| s.rule).collect();
    assert_eq!(rules, vec![Rule::Default, Rule::SelfWait, Rule::Default, Rule::Conditional]);
    assert_eq!(trace.steps[2].merged_into.as_deref(), Some("2"));
}

#[test]
fn rebuild_is_deterministic() {
    let a = build(&SECOND_LAYER);
    let b = build(&SECOND_LAYER);
    assert_eq!(a, b);
}
