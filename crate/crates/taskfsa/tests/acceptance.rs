//! End-to-end acceptance run over the bundled fixtures. Prints one line
//! per criterion and exits non-zero if any fails.

mod common;
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use taskfsa::pipeline::{build, build_alternatives, query_tree, verify};
use taskfsa_core::iso::isomorphic;
use taskfsa_core::product::DeadlockPolicy;
use taskfsa_core::smv::{export_smv, validate_smv};
use taskfsa_core::stepparse::{Rule, StepParser};
use taskfsa_core::{check, parse_ltl, CheckOptions, Controller, Model, RefinementSession, SessionStatus};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn same_graph(name: &str, got: &Controller, states: usize) -> Result<(), String> {
    let want = expected(name);
    ensure(got.states.len() == states, format!("{}: {} states, expected {}", name, got.states.len(), states))?;
    ensure(isomorphic(got, &want), format!("{}: not isomorphic to the expected controller", name))
}

fn light_session() -> RefinementSession {
    let mut glm = replay("light_session");
    let p = StepParser::new();
    let cfg = config("light_session");
    let mut s = RefinementSession::start(&mut glm, &p, AT_LIGHT, model("light_crossing"), specs("light_crossing"), cfg.session_config()).unwrap();
    s.manual_refine(&mut glm, &p, LIGHT_FIRST).unwrap();
    s.manual_refine(&mut glm, &p, LIGHT_SECOND).unwrap();
    s
}

fn reboot_session() -> RefinementSession {
    let mut glm = replay("wifi");
    let p = StepParser::new();
    let cfg = config("wifi");
    let mut s = RefinementSession::start(&mut glm, &p, REBOOT, model("router_reboot"), specs("reach_goal"), cfg.session_config()).unwrap();
    s.manual_refine(&mut glm, &p, REBOOT_FIRST).unwrap();
    s.manual_refine(&mut glm, &p, REBOOT_SECOND).unwrap();
    s
}

/// The plain crossing session, after automatic refinement and, if asked,
/// pruning.
fn crossing_session(prune: bool) -> RefinementSession {
    let mut glm = replay("crossroad");
    let p = StepParser::new();
    let tree = query_tree(&mut glm, CROSS, 1, &[]).unwrap();
    let cfg = config("crossroad");
    let mut s = RefinementSession::from_tree(&mut glm, &p, tree, model("plain_crossing"), specs("plain_crossing"), cfg.session_config()).unwrap();
    s.auto_refine(&mut glm, &p).unwrap();
    if prune {
        s.prune(&mut glm, &p).unwrap();
    }
    s
}

fn keyword_table() -> Outcome {
    let parser = StepParser::new();
    let rows = [
        ("[dial number]", Rule::Default),
        ("[proceed] [1]", Rule::Direct),
        ("[if] [no car], [cross]", Rule::Conditional),
        ("[if] [no car], [cross]. [if], [car] [stay].", Rule::ConditionalElse),
        ("[wait] [car pass] [cross]", Rule::SelfWait),
        ("[stay] [until] [car pass]", Rule::SelfUntil),
    ];
    let mut hits = 0;
    for (text, want) in rows {
        let got = parser.parse_step("1", text).map_err(|e| format!("{}: {}", text, e))?.rule;
        ensure(got == want, format!("{:?} classified as {:?}, expected {:?}", text, got, want))?;
        hits += 1;
    }
    Ok(format!("{}/6 patterns", hits))
}

fn figures() -> Outcome {
    let mut glm = replay("crossroad");
    let plain = query_tree(&mut glm, CROSS, 1, &[]).map_err(|e| e.to_string())?;
    let light = query_tree(&mut glm, AT_LIGHT, 1, &[]).map_err(|e| e.to_string())?;
    let joined = build_alternatives("traffic light", &light, &plain, false).map_err(|e| e.to_string())?;
    same_graph("two_scenarios", &joined, 7)?;

    let s = crossing_session(false);
    let expanded = s.history.iter().find(|i| i.frontier.len() == 9).ok_or("no second-layer iteration")?;
    same_graph("second_layer", &expanded.controller, 10)?;

    let mut glm = replay("dental");
    let t = query_tree(&mut glm, DENTAL, 1, &config("dental").expand).map_err(|e| e.to_string())?;
    same_graph("dental", &build(&t, false).map_err(|e| e.to_string())?, 11)?;

    let mut glm = replay("mpc");
    let t = query_tree(&mut glm, MPC, 1, &config("mpc").expand).map_err(|e| e.to_string())?;
    same_graph("mpc", &build(&t, false).map_err(|e| e.to_string())?, 13)?;

    same_graph("light_locate", &light_session().history[0].controller, 4)?;

    let mut glm = replay("wifi");
    let t = query_tree(&mut glm, REBOOT, 1, &[]).map_err(|e| e.to_string())?;
    same_graph("reboot_initial", &build(&t, false).map_err(|e| e.to_string())?, 8)?;
    Ok("6/6 isomorphic".into())
}

fn projection(m: &Model, c: &Controller, spec: &str) -> Result<Option<String>, String> {
    let f = parse_ltl(spec).map_err(|e| e.to_string())?;
    let v = check(m, c, &f, CheckOptions::default()).map_err(|e| e.to_string())?;
    Ok(v.counterexample.map(|cx| cx.projection().to_string()))
}

fn expect_verdict(what: &str, got: Option<String>, want: Option<&str>) -> Result<(), String> {
    match (got.as_deref(), want) {
        (None, None) => Ok(()),
        (Some(g), Some("")) => Ok(ensure(!g.is_empty(), what)?),
        (Some(g), Some(w)) if g == w => Ok(()),
        (g, w) => Err(format!("{}: got {:?}, expected {:?}", what, g.unwrap_or("pass"), w.unwrap_or("pass"))),
    }
}

fn verdicts() -> Outcome {
    let light = model("light_crossing");
    let phi1 = &specs("light_crossing")[0];
    expect_verdict("7b", projection(&light, &expected("light_locate"), phi1)?, Some("loop(p0)"))?;
    expect_verdict("7c", projection(&light, &expected("light_approach"), phi1)?, Some("p0 -> p1 -> p3 -> loop(p5)"))?;
    expect_verdict("7d", projection(&light, &expected("light_guarded"), phi1)?, None)?;
    let plain = model("plain_crossing");
    let phi2 = &specs("plain_crossing")[0];
    expect_verdict("8b", projection(&plain, &expected("plain_steps"), phi2)?, Some(""))?;
    expect_verdict("8c", projection(&plain, &expected("plain_pruned"), phi2)?, None)?;
    let s = reboot_session();
    let want = [Some("p0 -> p1 -> p2 -> loop(p5)"), Some("p0 -> p1 -> p2 -> p3 -> p4 -> loop(p5)"), None];
    ensure(s.history.len() == 3, format!("router session has {} iterations", s.history.len()))?;
    for (i, (it, w)) in s.history.iter().zip(want).enumerate() {
        let got = it.verdicts[0].counterexample.as_ref().map(|cx| cx.projection().to_string());
        expect_verdict(&format!("router iteration {}", i + 1), got, w)?;
    }
    Ok("8/8 verdicts and projections".into())
}

fn refinement() -> Outcome {
    let s = light_session();
    let statuses: Vec<SessionStatus> = s.history.iter().map(|i| i.status).collect();
    ensure(
        statuses == [SessionStatus::Fail, SessionStatus::Fail, SessionStatus::Pass],
        format!("crossing session statuses {:?}", statuses),
    )?;
    same_graph("light_guarded", s.controller(), 4)?;
    let r = reboot_session();
    let manual = r.history.iter().filter(|i| i.instruction.is_some()).count();
    ensure(r.status() == SessionStatus::Pass && manual == 2, format!("router session: {} after {} refinements", r.status(), manual))?;
    ensure(r.history[1].status == SessionStatus::Fail, "router session passed after one refinement")?;
    let c = crossing_session(true);
    ensure(c.status() == SessionStatus::Pass, "pruned session does not pass")?;
    same_graph("plain_pruned", c.controller(), 5)?;
    Ok("pass at iteration 3; pass after 2 refinements; pruned controller matches".into())
}

fn checker_oracle() -> Outcome {
    let t = support::checker_agreement(0..500)?;
    ensure(t.fails > 50 && t.passes > 50, format!("degenerate sample {:?}", t))?;
    Ok(format!("{} instances agree ({} fail, {} pass)", t.instances, t.fails, t.passes))
}

fn translation_oracle() -> Outcome {
    let n = support::translation_agreement(200, 2, 200)?;
    Ok(format!("200 formulas, {} lassos agree", n))
}

/// Ask NuSMV for its verdict when it is installed.
fn nusmv_verdict(path: &Path) -> Option<bool> {
    let out = Command::new("NuSMV").arg(path).output().ok()?;
    let text = String::from_utf8_lossy(&out.stdout);
    if text.contains("is false") {
        Some(false)
    } else if text.contains("is true") {
        Some(true)
    } else {
        None
    }
}

fn smv_exports() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let reboot = reboot_session();
    let cases = [
        ("light", model("light_crossing"), expected("light_guarded"), specs("light_crossing")[0].clone()),
        ("plain", model("plain_crossing"), expected("plain_pruned"), specs("plain_crossing")[0].clone()),
        ("router", model("router_reboot"), reboot.controller().clone(), specs("reach_goal")[0].clone()),
    ];
    let mut cross_checked = 0;
    for (name, m, c, spec) in cases {
        let f = parse_ltl(&spec).map_err(|e| e.to_string())?;
        let text = export_smv(&m, &c, Some(&f));
        validate_smv(&text).map_err(|e| format!("{}: {}", name, e))?;
        ensure(text.contains("LTLSPEC"), format!("{}: no LTLSPEC line", name))?;
        let path = dir.path().join(format!("{}.smv", name));
        std::fs::write(&path, &text).map_err(|e| e.to_string())?;
        if let Some(v) = nusmv_verdict(&path) {
            let ours = verify(&m, &c, std::slice::from_ref(&spec), DeadlockPolicy::Stutter).map_err(|e| e.to_string())?.pass;
            ensure(v == ours, format!("{}: NuSMV says {}, checker says {}", name, v, ours))?;
            cross_checked += 1;
        }
    }
    if cross_checked == 0 {
        Ok("3/3 valid (NuSMV not installed)".into())
    } else {
        Ok(format!("3/3 valid, {} confirmed by NuSMV", cross_checked))
    }
}

fn cli(args: &[&str]) -> Result<(), String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["taskfsa"];
    full.extend_from_slice(args);
    let code = taskfsa::cli::run(full, &mut out, &mut err);
    if code > 1 {
        return Err(format!("{:?} exited {}: {}", args, code, String::from_utf8_lossy(&err)));
    }
    Ok(())
}

/// Every output of the command-line pipeline for all case studies.
fn pipeline_outputs(root: &Path) -> Result<(), String> {
    let fx = fixtures();
    let s = |p: &Path| p.to_string_lossy().into_owned();
    let cfg = |case: &str| s(&fx.join(case).join("config.toml"));
    let out = |sub: &str| s(&root.join(sub));
    cli(&["--config", &cfg("crossroad"), "--out", &out("plain"), "steps", CROSS])?;
    cli(&["--config", &cfg("crossroad"), "--out", &out("light"), "steps", AT_LIGHT])?;
    cli(&["--out", &out("plain"), "build", &out("plain/steps.json")])?;
    cli(&["--out", &out("joined"), "build", &out("light/steps.json"), "--when", "traffic light", "--otherwise", &out("plain/steps.json")])?;
    for case in ["dental", "mpc"] {
        let task = if case == "dental" { DENTAL } else { MPC };
        cli(&["--config", &cfg(case), "--out", &out(case), "steps", task])?;
        cli(&["--out", &out(case), "build", &out(&format!("{}/steps.json", case))])?;
    }
    for (case, task, first, second) in [("light_session", AT_LIGHT, LIGHT_FIRST, LIGHT_SECOND), ("wifi", REBOOT, REBOOT_FIRST, REBOOT_SECOND)] {
        let dir = out(&format!("{}_session", case));
        cli(&["--config", &cfg(case), "--out", &dir, "session", "create", task])?;
        let doc = format!("{}/session.json", dir);
        cli(&["--config", &cfg(case), "--out", &dir, "refine", &doc, "--instruction", first])?;
        cli(&["--config", &cfg(case), "--out", &dir, "refine", &doc, "--instruction", second])?;
    }
    let dir = out("auto_session");
    cli(&["--config", &cfg("crossroad"), "--out", &dir, "session", "create", "--steps", &out("plain/steps.json")])?;
    let doc = format!("{}/session.json", dir);
    cli(&["--config", &cfg("crossroad"), "--out", &dir, "refine", &doc, "--auto"])?;
    cli(&["--config", &cfg("crossroad"), "--out", &dir, "refine", &doc, "--prune"])?;
    Ok(())
}

fn files_under(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    pipeline_outputs(a.path())?;
    pipeline_outputs(b.path())?;
    let (fa, fb) = (files_under(a.path()), files_under(b.path()));
    ensure(fa == fb, "the two runs wrote different file sets")?;
    let mut compared = 0;
    for f in &fa {
        let name = f.to_string_lossy();
        if !(name.ends_with("controller.json") || name.ends_with(".dot")) {
            continue;
        }
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        ensure(x == y, format!("{} differs between runs", name))?;
        compared += 1;
    }
    ensure(compared >= 14, format!("only {} controller files written", compared))?;
    Ok(format!("{} controller and DOT files identical", compared))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("keyword table patterns", Duration::from_secs(1), keyword_table),
        ("case-study controllers", Duration::from_secs(5), figures),
        ("verification verdicts", Duration::from_secs(10), verdicts),
        ("refinement loops", Duration::from_secs(30), refinement),
        ("checker vs enumeration", Duration::from_secs(120), checker_oracle),
        ("automaton vs lasso semantics", Duration::from_secs(120), translation_oracle),
        ("SMV exports", Duration::from_secs(60), smv_exports),
        ("determinism", Duration::from_secs(60), determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = started.elapsed();
        let result = match result {
            Ok(_) if took > *limit => Err(format!("took {:.2?}, limit {:?}", took, limit)),
            r => r,
        };
        match result {
            Ok(detail) => println!("criterion {}: PASS  {} ({:.2?}): {}", i + 1, name, took, detail),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {} ({:.2?}): {}", i + 1, name, took, why);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
