//! Command-line driver. Exit codes: 0 success or pass, 1 verification
//! failure, 2 usage or input error, 3 backend error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use taskfsa_core::glm::Transcript;
use taskfsa_core::product::DeadlockPolicy;
use taskfsa_core::refine::RefineError;
use taskfsa_core::smv::export_smv;
use taskfsa_core::stepparse::StepParser;
use taskfsa_core::{parse_ltl, Controller, Glm, GlmError, Model, RefinementSession, SessionStatus, StepTree};

use crate::config::{BackendKind, PipelineConfig};
use crate::dot::controller_dot;
use crate::io::{read_doc, write_doc, SpecSet};
use crate::pipeline;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "taskfsa", version, about = "Build task controllers from language-model step lists and verify them")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct Common {
    /// TOML pipeline configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Answer prompts from a recorded transcript (file or directory).
    #[arg(long, global = true)]
    pub replay: Option<PathBuf>,
    /// Query the live endpoint named by TASKFSA_GLM_ENDPOINT.
    #[arg(long, global = true, conflicts_with = "replay")]
    pub live: bool,
    /// Write the transcript of this run here.
    #[arg(long, global = true)]
    pub record: Option<PathBuf>,
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    #[arg(long, global = true)]
    pub max_depth: Option<usize>,
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Spec document; repeatable.
    #[arg(long, global = true)]
    pub spec: Vec<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Keyword bias override, KEYWORD=WEIGHT; repeatable.
    #[arg(long, global = true, value_parser = parse_bias)]
    pub bias: Vec<(String, i32)>,
    /// Report reachable deadlocks as violations.
    #[arg(long, global = true)]
    pub strict_deadlock: bool,
}

fn parse_bias(s: &str) -> Result<(String, i32), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEYWORD=WEIGHT, got {:?}", s))?;
    let w = v.trim().parse::<i32>().map_err(|e| e.to_string())?;
    Ok((k.trim().to_string(), w))
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Query the step list for a task.
    Steps {
        task: String,
        /// Step to expand after the top-level query; repeatable.
        #[arg(long)]
        expand: Vec<String>,
    },
    /// Build a controller from a step document.
    Build {
        steps: PathBuf,
        /// Read the leaves as one flat step list instead of splicing.
        #[arg(long)]
        flat: bool,
        /// Branch on this proposition: STEPS when it holds, --otherwise when not.
        #[arg(long, requires = "otherwise")]
        when: Option<String>,
        #[arg(long, requires = "when")]
        otherwise: Option<PathBuf>,
    },
    /// Check a controller against a model and specs.
    Verify {
        controller: PathBuf,
        /// Also write an SMV rendering of the closed loop.
        #[arg(long)]
        smv: Option<PathBuf>,
    },
    /// Create or inspect refinement sessions.
    #[command(subcommand)]
    Session(SessionCommand),
    /// Refine a session.
    Refine {
        session: PathBuf,
        #[arg(long, group = "how")]
        auto: bool,
        #[arg(long, group = "how")]
        instruction: Option<String>,
        #[arg(long, group = "how")]
        prune: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Directory where session documents are saved.
        #[arg(long)]
        store: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum SessionCommand {
    /// Query steps for TASK (or read --steps), build and verify.
    Create {
        task: Option<String>,
        #[arg(long)]
        steps: Option<PathBuf>,
    },
    /// Print the status line of a session document.
    Show { session: PathBuf },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Backend(_) => EXIT_BACKEND,
        }
    }
}

fn usage<E: ToString>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

impl From<GlmError> for CliError {
    fn from(e: GlmError) -> Self {
        match e {
            GlmError::BackendUnavailable { .. } | GlmError::ReplayMiss { .. } => CliError::Backend(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<RefineError> for CliError {
    fn from(e: RefineError) -> Self {
        match e {
            RefineError::Glm(g) => g.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// Flags layered over the config file.
pub fn resolve_config(common: &Common) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p).map_err(usage)?,
        None => PipelineConfig::default(),
    };
    if let Some(r) = &common.replay {
        cfg.backend = BackendKind::Replay;
        cfg.transcript = Some(r.clone());
    }
    if common.live {
        cfg.backend = BackendKind::Live;
    }
    if let Some(d) = common.depth {
        cfg.depth = d;
    }
    if let Some(d) = common.max_depth {
        cfg.max_depth = d;
    }
    if let Some(m) = &common.model {
        cfg.model = Some(m.clone());
    }
    if !common.spec.is_empty() {
        cfg.specs = common.spec.clone();
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    for (k, v) in &common.bias {
        cfg.bias.insert(k.clone(), *v);
    }
    if common.strict_deadlock {
        cfg.deadlock = DeadlockPolicy::Fail;
    }
    Ok(cfg)
}

fn out_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn load_model_and_specs(cfg: &PipelineConfig) -> Result<(Model, Vec<String>), CliError> {
    let model_path = cfg.model.as_ref().ok_or_else(|| usage("--model is required"))?;
    let model: Model = read_doc(model_path).map_err(usage)?;
    if cfg.specs.is_empty() {
        return Err(usage("at least one --spec is required"));
    }
    let mut specs = Vec::new();
    for p in &cfg.specs {
        let s: SpecSet = read_doc(p).map_err(usage)?;
        specs.extend(s.specs);
    }
    Ok((model, specs))
}

fn save_transcript(common: &Common, cfg: &PipelineConfig, glm: &mut Glm, default_name: Option<&str>) -> Result<(), CliError> {
    let t: Transcript = glm.take_transcript();
    let target = match (&common.record, default_name) {
        (Some(p), _) => p.clone(),
        (None, Some(name)) => out_dir(cfg).join(name),
        (None, None) => return Ok(()),
    };
    write_doc(&target, &t).map_err(usage)
}

fn status_word(s: SessionStatus) -> &'static str {
    match s {
        SessionStatus::Pass => "pass",
        SessionStatus::Fail => "fail",
        SessionStatus::Unrepresentable => "unrepresentable",
    }
}

fn describe_session(s: &RefinementSession, out: &mut dyn Write) -> std::io::Result<()> {
    let last = s.latest();
    writeln!(out, "iteration {}: {}", s.history.len(), status_word(last.status))?;
    for v in &last.verdicts {
        match &v.counterexample {
            Some(cx) if !v.pass => writeln!(out, "  FAIL {}  model path: {}", v.spec, cx.projection())?,
            _ => writeln!(out, "  {} {}", if v.pass { "PASS" } else { "FAIL" }, v.spec)?,
        }
    }
    Ok(())
}

fn session_code(s: &RefinementSession) -> i32 {
    if s.status() == SessionStatus::Pass {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = resolve_config(&cli.common)?;
    let io = |e: std::io::Error| usage(e);
    match cli.command {
        Command::Steps { task, mut expand } => {
            if task.trim().is_empty() {
                return Err(usage("task description must not be empty"));
            }
            cfg.validate().map_err(usage)?;
            let mut glm = cfg.glm().map_err(|e| CliError::Backend(e.to_string()))?;
            let mut all = cfg.expand.clone();
            all.append(&mut expand);
            let tree = pipeline::query_tree(&mut glm, &task, cfg.depth, &all)?;
            let dir = out_dir(&cfg);
            write_doc(&dir.join("steps.json"), &tree).map_err(usage)?;
            save_transcript(&cli.common, &cfg, &mut glm, None)?;
            for n in tree.nodes() {
                writeln!(out, "[{}] {}", n.number, n.text).map_err(io)?;
            }
            Ok(EXIT_OK)
        }
        Command::Build { steps, flat, when, otherwise } => {
            let tree: StepTree = read_doc(&steps).map_err(usage)?;
            let c = match (when, otherwise) {
                (Some(prop), Some(other)) => {
                    let alt: StepTree = read_doc(&other).map_err(usage)?;
                    pipeline::build_alternatives(&prop, &tree, &alt, flat).map_err(usage)?
                }
                _ => pipeline::build(&tree, flat).map_err(usage)?,
            };
            write_outputs(&out_dir(&cfg), &c)?;
            writeln!(out, "{} states, {} transitions", c.states.len(), c.transitions.len()).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Verify { controller, smv } => {
            let c: Controller = read_doc(&controller).map_err(usage)?;
            let (model, specs) = load_model_and_specs(&cfg)?;
            let report = pipeline::verify(&model, &c, &specs, cfg.deadlock).map_err(usage)?;
            if let Some(path) = smv {
                let first = specs.first().map(|s| parse_ltl(s)).transpose().map_err(usage)?;
                std::fs::write(&path, export_smv(&model, &c, first.as_ref())).map_err(io)?;
            }
            if let Some(dir) = &cfg.out {
                write_doc(&dir.join("report.json"), &report).map_err(usage)?;
            }
            for v in &report.verdicts {
                if v.pass {
                    writeln!(out, "PASS {}", v.spec).map_err(io)?;
                } else {
                    writeln!(out, "FAIL {}", v.spec).map_err(io)?;
                    if let Some(cx) = &v.counterexample {
                        write!(out, "{}", cx.render()).map_err(io)?;
                    }
                }
            }
            Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Session(SessionCommand::Create { task, steps }) => {
            let (model, specs) = load_model_and_specs(&cfg)?;
            cfg.validate().map_err(usage)?;
            let mut glm = cfg.glm().map_err(|e| CliError::Backend(e.to_string()))?;
            let parser = StepParser::new();
            let session = match (task, steps) {
                (_, Some(path)) => {
                    let tree: StepTree = read_doc(&path).map_err(usage)?;
                    RefinementSession::from_tree(&mut glm, &parser, tree, model, specs, cfg.session_config())?
                }
                (Some(task), None) if !task.trim().is_empty() => {
                    RefinementSession::start(&mut glm, &parser, &task, model, specs, cfg.session_config())?
                }
                _ => return Err(usage("give a task description or --steps")),
            };
            let dir = out_dir(&cfg);
            write_doc(&dir.join("session.json"), &session).map_err(usage)?;
            write_outputs(&dir, session.controller())?;
            save_transcript(&cli.common, &cfg, &mut glm, None)?;
            describe_session(&session, out).map_err(io)?;
            Ok(session_code(&session))
        }
        Command::Session(SessionCommand::Show { session }) => {
            let s: RefinementSession = read_doc(&session).map_err(usage)?;
            describe_session(&s, out).map_err(io)?;
            Ok(session_code(&s))
        }
        Command::Refine { session, auto, instruction, prune } => {
            let mut s: RefinementSession = read_doc(&session).map_err(usage)?;
            cfg.validate().map_err(usage)?;
            let mut glm = cfg.glm().map_err(|e| CliError::Backend(e.to_string()))?;
            let parser = StepParser::new();
            if auto {
                s.auto_refine(&mut glm, &parser)?;
            } else if prune {
                s.prune(&mut glm, &parser)?;
            } else if let Some(text) = instruction {
                s.manual_refine(&mut glm, &parser, &text)?;
            } else {
                return Err(usage("choose one of --auto, --instruction or --prune"));
            }
            let target = cfg.out.as_ref().map(|d| d.join("session.json")).unwrap_or(session);
            write_doc(&target, &s).map_err(usage)?;
            if let Some(dir) = &cfg.out {
                write_outputs(dir, s.controller())?;
            }
            save_transcript(&cli.common, &cfg, &mut glm, None)?;
            describe_session(&s, out).map_err(io)?;
            Ok(session_code(&s))
        }
        Command::Serve { addr, store } => {
            let state = crate::service::AppState::new(cfg, store);
            let rt = tokio::runtime::Runtime::new().map_err(io)?;
            rt.block_on(crate::service::serve(&addr, state)).map_err(io)?;
            Ok(EXIT_OK)
        }
    }
}

fn write_outputs(dir: &Path, c: &Controller) -> Result<(), CliError> {
    write_doc(&dir.join("controller.json"), c).map_err(usage)?;
    std::fs::write(dir.join("controller.dot"), controller_dot(c)).map_err(usage)
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e);
            e.code()
        }
    }
}
