//! Authoring of the bundled replay transcripts and expected controllers.
//!
//! The completions below are the step lists of the worked case studies.
//! Each case runs the real pipeline against a responder that answers
//! prompts by their cue, so prompt wording always matches what the
//! pipeline sends. `committed_fixtures_are_current` keeps the files on disk
//! in sync; run the ignored `write_fixtures` test to regenerate them.

mod common;

use std::path::Path;

use common::*;
use taskfsa::io::{read_doc, to_text, Payload};
use taskfsa::pipeline::query_tree;
use taskfsa_core::glm::{refinement_header, Backend, GlmError, Prompt, Reply, Transcript};
use taskfsa_core::stepparse::StepParser;
use taskfsa_core::{Controller, RefinementSession};

struct Responder {
    /// (cue, completion): the cue ends the prompt.
    rules: Vec<(String, String)>,
    /// (header, completion): the header starts the prompt.
    headed: Vec<(String, String)>,
    same: Vec<(&'static str, &'static str, &'static str)>,
}

impl Responder {
    fn new(same: &[(&'static str, &'static str, &'static str)]) -> Self {
        Responder { rules: Vec::new(), headed: Vec::new(), same: same.to_vec() }
    }

    fn on(mut self, cue: impl Into<String>, completion: &str) -> Self {
        self.rules.push((cue.into(), completion.to_string()));
        self
    }

    fn on_refine(mut self, instruction: &str, completion: &str) -> Self {
        self.headed.push((refinement_header(instruction), completion.to_string()));
        self
    }

    fn judge(&self, a: &str, b: &str) -> String {
        let hit = self.same.iter().find(|(x, y, _)| x.eq_ignore_ascii_case(a) && y.eq_ignore_ascii_case(b));
        match hit {
            Some((_, _, why)) => format!("Yes, {}", why),
            None => "No, the two phrases have different effects.".to_string(),
        }
    }
}

fn quoted_pair(s: &str) -> Option<(&str, &str)> {
    let s = s.trim().strip_prefix('"')?.strip_suffix('"')?;
    s.split_once("\" and \"")
}

impl Backend for Responder {
    fn id(&self) -> String {
        "authored".into()
    }

    fn complete(&mut self, prompt: &Prompt) -> Result<Reply, GlmError> {
        let p = prompt.text.as_str();
        let text = if let Some(rest) = p.strip_prefix("Do the two phrases ") {
            let (a, b) = quoted_pair(rest.trim_end_matches(" lead to the same effect?")).unwrap();
            self.judge(a, b)
        } else if let Some(rest) = p.strip_prefix("Do the following pairs of verb phrases lead to the same effect?") {
            let mut lines = Vec::new();
            for line in rest.lines().filter(|l| !l.trim().is_empty()) {
                let (k, pair) = line.split_once(", ").unwrap();
                let (a, b) = quoted_pair(pair).unwrap();
                lines.push(format!("{}. {}", k, self.judge(a, b)));
            }
            lines.join("\n")
        } else {
            let by_cue = self.rules.iter().find(|(cue, _)| p.ends_with(cue.as_str()));
            match by_cue.or_else(|| self.headed.iter().find(|(h, _)| p.starts_with(h.as_str()))) {
                Some((_, c)) => c.clone(),
                None => return Err(GlmError::BackendUnavailable { attempts: 1, detail: format!("no scripted reply for {:?}", p) }),
            }
        };
        Ok(Reply { text, timestamp: None })
    }
}

const CROSS_STEPS: &str = " Look both ways before crossing the road.
[2] If there are no cars coming, proceed to cross the road.
[3] If there are cars coming, wait for them to pass before crossing the road.";

const AT_LIGHT_STEPS: &str = " Locate the traffic light.
[2] Wait for the traffic light to turn green.
[3] Look both ways before crossing the road.
[4] Cross the road if no cars are coming.";

fn crossroad() -> Transcript {
    let responder = Responder::new(&[("Walk across the road", "cross the road", "both phrases lead to reaching the other side of the road.")])
        .on("Steps for: Cross the road\n[1]", CROSS_STEPS)
        .on("Steps for: Cross the road at the traffic light\n[1]", AT_LIGHT_STEPS)
        .on(
            "Substeps for: [1] Look both ways before crossing the road.\n[1.1]",
            " Face the direction you want to cross the road in.
[1.2] Look to the left.
[1.3] Look to the right.
[1.4] If there are no cars coming, go to [2]. If there are cars coming, go to [3].",
        )
        .on(
            "Substeps for: [2] If there are no cars coming, proceed to cross the road.\n[2.1]",
            " Walk across the road.
[2.2] Once you have reached the other side, look both ways again to make sure no cars are coming.
[2.3] If there are no cars coming, proceed to [4]. If there are cars coming, back to [1].",
        )
        .on(
            "Substeps for: [3] If there are cars coming, wait for them to pass before crossing the road.\n[3.1]",
            " Wait for the cars to pass.
[3.2] Once the cars have passed, back to [2].",
        );
    let mut glm = glm_with("crossroad", Box::new(responder));
    let parser = StepParser::new();
    let plain = query_tree(&mut glm, CROSS, 1, &[]).unwrap();
    query_tree(&mut glm, AT_LIGHT, 1, &[]).unwrap();
    let cfg = config("crossroad");
    let mut s =
        RefinementSession::from_tree(&mut glm, &parser, plain, model("plain_crossing"), specs("plain_crossing"), cfg.session_config())
            .unwrap();
    s.auto_refine(&mut glm, &parser).unwrap();
    s.prune(&mut glm, &parser).unwrap();
    glm.take_transcript()
}

fn light_session() -> Transcript {
    let responder = Responder::new(&[("turn green", "the traffic light is green", "a green light and turning green both let pedestrians cross.")])
        .on("Steps for: Cross the road at the traffic light\n[1]", AT_LIGHT_STEPS)
        .on_refine(
            LIGHT_FIRST,
            " Approach the pedestrian crossing.
[2] Wait for the traffic light to turn green.
[3] Look both ways before crossing the road.
[4] Cross the road if no cars are coming.",
        )
        .on_refine(
            LIGHT_SECOND,
            " Approach the pedestrian crossing.
[2] Wait for the traffic light to turn green.
[3] Look both ways before crossing the road.
[4] Cross the road if no cars are coming and the traffic light is green.",
        );
    let mut glm = glm_with("light_session", Box::new(responder));
    let parser = StepParser::new();
    let cfg = config("light_session");
    let mut s = RefinementSession::start(
        &mut glm,
        &parser,
        AT_LIGHT,
        model("light_crossing"),
        specs("light_crossing"),
        cfg.session_config(),
    )
    .unwrap();
    s.manual_refine(&mut glm, &parser, LIGHT_FIRST).unwrap();
    s.manual_refine(&mut glm, &parser, LIGHT_SECOND).unwrap();
    glm.take_transcript()
}

fn dental() -> Transcript {
    let responder = Responder::new(&[])
        .on(
            "Steps for finding a dentist and making an appointment:\n[1]",
            " Research local dental clinics
[2] Read patient reviews
[3] Compare services and prices
[4] Schedule an appointment",
        )
        .on(
            "Substeps for step 1:\n[1.1]",
            " Online search for local dental clinics
[1.2] Gather recommendations from acquaintances
[1.3] Check insurance provider's in-network list",
        )
        .on(
            "Substeps for step 1.3:\n[1.3.1]",
            " Get insurance provider's contact information
[1.3.2] Call the insurance provider's customer service
[1.3.3] Request a list of in-network dental clinics",
        );
    let mut glm = glm_with("dental", Box::new(responder));
    query_tree(&mut glm, DENTAL, 1, &config("dental").expand).unwrap();
    glm.take_transcript()
}

fn mpc() -> Transcript {
    let responder = Responder::new(&[])
        .on(
            "Steps for: Secure multi-party computation\n[1]",
            " Define problem and inputs.
[2] Secret sharing of inputs.
[3] Compute secret shares.
[4] Reconstruct the final result.
[5] Output verification.
[6] Decrypt the final result.",
        )
        .on(
            "Substeps for: [2] Secret sharing of inputs.\n[2.1]",
            " Generate random secret shares.
[2.2] Securely store secret shares.",
        )
        .on(
            "Substeps for: [3] Compute secret shares.\n[3.1]",
            " Encrypt secret share.
[3.2] Distribute encrypted shares.
[3.3] Compute ciphertext.
[3.4] Broadcast result.",
        );
    let mut glm = glm_with("mpc", Box::new(responder));
    query_tree(&mut glm, MPC, 1, &config("mpc").expand).unwrap();
    glm.take_transcript()
}

fn wifi() -> Transcript {
    let same = [
        ("Unplug the modem's power cord", "Unplug the modem", "both phrases lead to cutting power to the modem."),
        ("Disconnect the router's power source", "Turn off the router", "both phrases lead to cutting power to the router."),
        ("Reconnect the modem's power cord", "Plug in the modem", "both phrases lead to restoring power to the modem."),
        ("Reconnect the router's power source", "Turn on the router", "both phrases lead to restoring power to the router."),
    ];
    let responder = Responder::new(&same)
        .on(
            "Steps for rebooting the modem and router:\n[1]",
            " Unplug the modem's power cord
[2] Disconnect the router's power source
[3] Reconnect the modem's power cord
[4] Observe the modem's indicator lights
[5] Reconnect the router's power source
[6] Monitor the router's indicator lights
[7] Confirm internet connectivity on devices",
        )
        .on_refine(
            REBOOT_FIRST,
            " Unplug the modem's power cord
[2] Disconnect the router's power source
[3] Reconnect the modem's power cord
[4] Wait two minutes
[5] Observe the modem's indicator lights
[6] Reconnect the router's power source
[7] Monitor the router's indicator lights
[8] Confirm internet connectivity on devices",
        )
        .on_refine(
            REBOOT_SECOND,
            " Unplug the modem's power cord
[2] Disconnect the router's power source
[3] Reconnect the modem's power cord
[4] Wait two minutes
[5] Observe the modem's indicator lights
[6] Reconnect the router's power source
[7] Wait two minutes
[8] Monitor the router's indicator lights
[9] Confirm internet connectivity on devices",
        );
    let mut glm = glm_with("wifi", Box::new(responder));
    let parser = StepParser::new();
    let cfg = config("wifi");
    let mut s =
        RefinementSession::start(&mut glm, &parser, REBOOT, model("router_reboot"), specs("reach_goal"), cfg.session_config()).unwrap();
    s.manual_refine(&mut glm, &parser, REBOOT_FIRST).unwrap();
    s.manual_refine(&mut glm, &parser, REBOOT_SECOND).unwrap();
    glm.take_transcript()
}

fn transcripts() -> Vec<(&'static str, Transcript)> {
    vec![
        ("crossroad", crossroad()),
        ("light_session", light_session()),
        ("dental", dental()),
        ("mpc", mpc()),
        ("wifi", wifi()),
    ]
}

fn edges(initial: &str, absorbing: &str, rows: &[(&str, &str, &str, &str)]) -> Controller {
    Controller::from_edges(initial, absorbing, rows).unwrap()
}

/// Controllers drawn in the case-study figures, with phrase ids in place
/// of the abbreviated figure labels.
fn figures() -> Vec<(&'static str, Controller)> {
    let plain = edges(
        "q1",
        "q3",
        &[
            ("q1", "true", "look way", "q2"),
            ("q2", "!car come | car pass", "cross road", "q3"),
            ("q2", "car come & !car pass", "eps", "q2"),
            ("q3", "true", "eps", "q3"),
        ],
    );
    let joined = edges(
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
    let second_layer = edges(
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
    let dental = edges(
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
    let mpc = edges(
        "q1",
        "q7",
        &[
            ("q1", "true", "define problem input", "q2"),
            ("q2", "true", "eps", "q21"),
            ("q21", "true", "generate random secret share", "q22"),
            ("q22", "true", "store secret share", "q3"),
            ("q3", "true", "eps", "q31"),
            ("q31", "true", "encrypt secret share", "q32"),
            ("q32", "true", "distribute encrypted share", "q33"),
            ("q33", "true", "compute ciphertext", "q34"),
            ("q34", "true", "broadcast result", "q4"),
            ("q4", "true", "reconstruct final result", "q5"),
            ("q5", "true", "output verification", "q6"),
            ("q6", "true", "decrypt final result", "q7"),
            ("q7", "true", "eps", "q7"),
        ],
    );
    let light_first = edges(
        "q1",
        "q5",
        &[
            ("q1", "true", "locate traffic light", "q2"),
            ("q2", "!green", "eps", "q2"),
            ("q2", "green", "look way", "q4"),
            ("q4", "car come", "eps", "q4"),
            ("q4", "!car come", "cross road", "q5"),
            ("q5", "true", "eps", "q5"),
        ],
    );
    let light_second = edges(
        "q1",
        "q5",
        &[
            ("q1", "true", "approach pedestrian crossing", "q2"),
            ("q2", "!green", "eps", "q2"),
            ("q2", "green", "look way", "q4"),
            ("q4", "car come", "eps", "q4"),
            ("q4", "!car come", "cross road", "q5"),
            ("q5", "true", "eps", "q5"),
        ],
    );
    let light_third = edges(
        "q1",
        "q5",
        &[
            ("q1", "true", "approach pedestrian crossing", "q2"),
            ("q2", "!green", "eps", "q2"),
            ("q2", "green", "look way", "q4"),
            ("q4", "!(!car come & green)", "eps", "q4"),
            ("q4", "!car come & green", "cross road", "q5"),
            ("q5", "true", "eps", "q5"),
        ],
    );
    let pruned = edges(
        "q11",
        "q3",
        &[
            ("q11", "true", "face direction", "q12"),
            ("q12", "true", "look left", "q13"),
            ("q13", "true", "look right", "q2"),
            ("q2", "!car come | car pass", "cross road", "q3"),
            ("q2", "car come & !car pass", "eps", "q2"),
            ("q3", "true", "eps", "q3"),
        ],
    );
    let reboot = edges(
        "q1",
        "q8",
        &[
            ("q1", "true", "unplug modem power cord", "q2"),
            ("q2", "true", "disconnect router power source", "q3"),
            ("q3", "true", "reconnect modem power cord", "q4"),
            ("q4", "true", "observe modem indicator light", "q5"),
            ("q5", "true", "reconnect router power source", "q6"),
            ("q6", "true", "monitor router indicator light", "q7"),
            ("q7", "true", "confirm internet connectivity", "q8"),
            ("q8", "true", "eps", "q8"),
        ],
    );
    vec![
        ("two_scenarios", joined),
        ("second_layer", second_layer),
        ("dental", dental),
        ("mpc", mpc),
        ("light_locate", light_first),
        ("light_approach", light_second),
        ("light_guarded", light_third),
        ("plain_steps", plain),
        ("plain_pruned", pruned),
        ("reboot_initial", reboot),
    ]
}

fn all_files() -> Vec<(std::path::PathBuf, String)> {
    let mut out = Vec::new();
    for (case, t) in transcripts() {
        out.push((fixtures().join(case).join("transcript.json"), to_text(&t)));
    }
    for (name, c) in figures() {
        assert!(c.validate().ok(), "{}: {:?}", name, c.validate());
        out.push((fixtures().join("expected").join(format!("{}.json", name)), to_text(&c)));
    }
    out
}

fn same_doc<T: Payload + PartialEq + std::fmt::Debug>(path: &Path, text: &str) {
    let on_disk: T = read_doc(path).unwrap_or_else(|e| panic!("{}", e));
    let fresh: T = taskfsa::io::from_text(text).unwrap();
    assert_eq!(on_disk, fresh, "{} is stale; run the ignored write_fixtures test", path.display());
}

#[test]
fn committed_fixtures_are_current() {
    for (path, text) in all_files() {
        if path.ends_with("transcript.json") {
            same_doc::<Transcript>(&path, &text);
        } else {
            same_doc::<Controller>(&path, &text);
        }
    }
}

#[test]
#[ignore]
fn write_fixtures() {
    for (path, text) in all_files() {
        std::fs::write(&path, text).unwrap();
    }
}
