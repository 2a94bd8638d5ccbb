//! Prompt protocol for querying a text-completion model for steps,
//! substeps, synonym judgements and refined step lists.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::steps::{parent_number, StepNode, StepTree};

pub const DEFAULT_KEYWORDS: [&str; 12] =
    ["if", "wait", "until", "after", "once", "before", "and", "or", "not", "no", "go to", "back to"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub max_tokens: u32,
    pub temperature: f64,
    /// Logit bias per keyword.
    pub keyword_bias: BTreeMap<String, i32>,
}

impl Default for Params {
    fn default() -> Self {
        Params { max_tokens: 256, temperature: 0.0, keyword_bias: DEFAULT_KEYWORDS.iter().map(|k| (k.to_string(), 5)).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prompt {
    pub text: String,
    pub params: Params,
}

impl Prompt {
    pub fn new(text: &str, params: &Params) -> Result<Prompt, GlmError> {
        if text.trim().is_empty() {
            return Err(GlmError::InvalidPrompt("empty prompt".into()));
        }
        if !(params.temperature >= 0.0 && params.temperature <= 2.0) {
            return Err(GlmError::InvalidPrompt(format!("temperature {} out of range", params.temperature)));
        }
        if params.max_tokens == 0 {
            return Err(GlmError::InvalidPrompt("max_tokens must be positive".into()));
        }
        Ok(Prompt { text: text.to_string(), params: params.clone() })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reply {
    pub text: String,
    pub timestamp: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GlmError {
    #[error("backend unavailable after {attempts} attempt(s): {detail}")]
    BackendUnavailable { attempts: u32, detail: String },
    #[error("prompt not found in transcript: {prompt:?}")]
    ReplayMiss { prompt: String },
    #[error("no step markers found in completion: {raw:?}")]
    MalformedCompletion { raw: String },
    #[error("completion is neither Yes nor No: {raw:?}")]
    UnparseableVerdict { raw: String },
    #[error("invalid prompt: {0}")]
    InvalidPrompt(String),
    #[error("no step numbered {0}")]
    UnknownStep(String),
}

pub trait Backend: Send {
    fn id(&self) -> String;
    fn complete(&mut self, prompt: &Prompt) -> Result<Reply, GlmError>;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub prompt: String,
    pub completion: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub backend_id: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn push(&mut self, e: TranscriptEntry) {
        self.entries.push(e);
    }

    pub fn extend(&mut self, other: &Transcript) {
        self.entries.extend(other.entries.iter().cloned());
    }
}

/// Collapse whitespace runs so prompts match regardless of layout.
pub fn normalize_prompt(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Answers prompts from a recorded transcript.
#[derive(Clone, Debug)]
pub struct ReplayBackend {
    entries: BTreeMap<String, (String, Option<u64>)>,
}

impl ReplayBackend {
    pub fn new(transcript: &Transcript) -> Self {
        let mut entries = BTreeMap::new();
        for e in &transcript.entries {
            entries.entry(normalize_prompt(&e.prompt)).or_insert((e.completion.clone(), e.timestamp));
        }
        ReplayBackend { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Backend for ReplayBackend {
    fn id(&self) -> String {
        "replay".into()
    }

    fn complete(&mut self, prompt: &Prompt) -> Result<Reply, GlmError> {
        match self.entries.get(&normalize_prompt(&prompt.text)) {
            Some((text, ts)) => Ok(Reply { text: text.clone(), timestamp: *ts }),
            None => Err(GlmError::ReplayMiss { prompt: prompt.text.clone() }),
        }
    }
}

/// Hands out canned completions in order, whatever the prompt. Used to
/// author transcripts and in tests.
#[derive(Clone, Debug, Default)]
pub struct ScriptedBackend {
    queue: VecDeque<String>,
}

impl ScriptedBackend {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(replies: I) -> Self {
        ScriptedBackend { queue: replies.into_iter().map(Into::into).collect() }
    }

    pub fn remaining(&self) -> usize {
        self.queue.len()
    }
}

impl Backend for ScriptedBackend {
    fn id(&self) -> String {
        "scripted".into()
    }

    fn complete(&mut self, prompt: &Prompt) -> Result<Reply, GlmError> {
        match self.queue.pop_front() {
            Some(text) => Ok(Reply { text, timestamp: None }),
            None => Err(GlmError::BackendUnavailable { attempts: 1, detail: format!("script exhausted at {:?}", prompt.text) }),
        }
    }
}

/// Prompt layouts. `{task}`, `{number}` and `{text}` are substituted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplates {
    pub steps: String,
    pub substeps: String,
    /// Prefix substep prompts with the exchanges that produced the
    /// ancestors of the expanded step.
    pub include_history: bool,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            steps: "Steps for: {task}\n[1]".into(),
            substeps: "Substeps for: [{number}] {text}\n[{number}.1]".into(),
            include_history: true,
        }
    }
}

fn fill(template: &str, task: &str, number: &str, text: &str) -> String {
    template.replace("{task}", task).replace("{number}", number).replace("{text}", text)
}

fn marker_at(line: &str) -> Option<(String, &str)> {
    let l = line.trim_start();
    if let Some(rest) = l.strip_prefix('[') {
        let end = rest.find(']')?;
        let num = &rest[..end];
        if is_step_number(num) {
            return Some((num.to_string(), rest[end + 1..].trim()));
        }
        return None;
    }
    let digits = l.find(|c: char| !(c.is_ascii_digit() || c == '.'))?;
    let head = &l[..digits];
    let rest = &l[digits..];
    if head.ends_with('.') && rest.starts_with(' ') {
        let num = head.trim_end_matches('.');
        if is_step_number(num) {
            return Some((num.to_string(), rest.trim()));
        }
    }
    None
}

fn is_step_number(s: &str) -> bool {
    !s.is_empty() && s.split('.').all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()))
}

/// Split a completion into numbered steps. `cue` is the step number the
/// prompt ended with (the completion then starts with that step's text).
/// Markers are recognised only at line starts, as "[k]" or "k.".
pub fn split_completion(completion: &str, cue: Option<&str>, parent: Option<&str>) -> Result<Vec<(String, String)>, GlmError> {
    let mut out: Vec<(String, String)> = Vec::new();
    let mut pending: Option<(String, String)> = None;
    for line in completion.lines() {
        if line.trim().is_empty() {
            continue;
        }
        if let Some((num, rest)) = marker_at(line) {
            if let Some(p) = pending.take() {
                out.push(p);
            }
            let num = match parent {
                Some(par) if !num.contains('.') => format!("{}.{}", par, num),
                _ => num,
            };
            pending = Some((num, rest.to_string()));
        } else {
            match &mut pending {
                Some((_, text)) => {
                    if !text.is_empty() {
                        text.push(' ');
                    }
                    text.push_str(line.trim());
                }
                None => match cue {
                    Some(c) => pending = Some((c.to_string(), line.trim().to_string())),
                    None => return Err(GlmError::MalformedCompletion { raw: completion.to_string() }),
                },
            }
        }
    }
    if let Some(p) = pending.take() {
        out.push(p);
    }
    out.retain(|(_, t)| !t.is_empty());
    if out.is_empty() {
        return Err(GlmError::MalformedCompletion { raw: completion.to_string() });
    }
    Ok(out)
}

/// Header for a refinement prompt. Instructions that already read as a
/// header are used as they are.
pub fn refinement_header(instruction: &str) -> String {
    let ins = instruction.trim();
    let lower = ins.to_lowercase();
    let mut h = if lower.starts_with("refine") || lower.starts_with("revise") {
        ins.to_string()
    } else if lower.starts_with("include") || lower.starts_with("to ") {
        let body = ins.strip_prefix("to ").unwrap_or(ins);
        if lower.starts_with("include") {
            format!("Revise the following steps to {}", body)
        } else {
            format!("Refine the following steps to {}", body)
        }
    } else {
        format!("Refine the following steps {}", ins)
    };
    if !h.ends_with(':') {
        h.push(':');
    }
    h
}

pub fn render_steps(nodes: &[StepNode]) -> String {
    nodes.iter().map(|n| format!("[{}] {}", n.number, n.text)).collect::<Vec<_>>().join("\n")
}

fn render_exchange(prompt: &str, nodes: &[StepNode]) -> String {
    let mut s = String::from(prompt);
    for (i, n) in nodes.iter().enumerate() {
        if i == 0 {
            s.push(' ');
        } else {
            s.push_str(&format!("\n[{}] ", n.number));
        }
        s.push_str(&n.text);
    }
    s
}

const SYNONYM_BATCH_HEADER: &str = "Do the following pairs of verb phrases lead to the same effect?";

pub fn synonym_prompt(a: &str, b: &str) -> String {
    format!("Do the two phrases \"{}\" and \"{}\" lead to the same effect?", a, b)
}

pub fn synonym_batch_prompt(pairs: &[(String, String)]) -> String {
    let mut s = String::from(SYNONYM_BATCH_HEADER);
    for (i, (a, b)) in pairs.iter().enumerate() {
        s.push_str(&format!("\n{}, \"{}\" and \"{}\"", i + 1, a, b));
    }
    s
}

/// A yes/no answer with the model's stated reason.
pub type Judgement = Result<(bool, String), GlmError>;

fn verdict(text: &str) -> Judgement {
    let t = text.trim_start();
    let lower = t.to_lowercase();
    let (ans, rest) = if lower.starts_with("yes") {
        (true, &t[3..])
    } else if lower.starts_with("no") {
        (false, &t[2..])
    } else {
        return Err(GlmError::UnparseableVerdict { raw: text.to_string() });
    };
    let rest = rest.trim_start_matches(['.', ',', ':', ';']).trim();
    Ok((ans, rest.to_string()))
}

/// Parse "1. Yes, ..." lines of a batch answer.
pub fn parse_batch_verdicts(completion: &str, n: usize) -> Vec<Judgement> {
    let mut found: BTreeMap<usize, Judgement> = BTreeMap::new();
    for line in completion.lines() {
        let l = line.trim();
        let digits = l.find(|c: char| !c.is_ascii_digit()).unwrap_or(l.len());
        if digits == 0 {
            continue;
        }
        let Ok(k) = l[..digits].parse::<usize>() else { continue };
        let rest = l[digits..].trim_start_matches(['.', ',', ')', ':']).trim();
        found.entry(k).or_insert_with(|| verdict(rest));
    }
    (1..=n)
        .map(|k| found.remove(&k).unwrap_or_else(|| Err(GlmError::UnparseableVerdict { raw: completion.to_string() })))
        .collect()
}

fn same_phrase(a: &str, b: &str) -> bool {
    normalize_prompt(&a.to_lowercase()) == normalize_prompt(&b.to_lowercase())
}

/// Client holding a backend, prompt settings and the session transcript.
pub struct Glm {
    backend: Box<dyn Backend>,
    pub params: Params,
    pub templates: PromptTemplates,
    transcript: Transcript,
}

impl Glm {
    pub fn new(backend: Box<dyn Backend>) -> Self {
        Glm { backend, params: Params::default(), templates: PromptTemplates::default(), transcript: Transcript::default() }
    }

    pub fn with_templates(mut self, templates: PromptTemplates) -> Self {
        self.templates = templates;
        self
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn take_transcript(&mut self) -> Transcript {
        core::mem::take(&mut self.transcript)
    }

    pub fn backend_id(&self) -> String {
        self.backend.id()
    }

    pub fn complete_text(&mut self, text: &str) -> Result<String, GlmError> {
        let p = Prompt::new(text, &self.params)?;
        self.complete(&p)
    }

    pub fn complete(&mut self, prompt: &Prompt) -> Result<String, GlmError> {
        let reply = self.backend.complete(prompt)?;
        self.transcript.push(TranscriptEntry {
            prompt: prompt.text.clone(),
            completion: reply.text.clone(),
            timestamp: reply.timestamp,
            backend_id: self.backend.id(),
        });
        Ok(reply.text)
    }

    pub fn steps_prompt(&self, task: &str) -> String {
        fill(&self.templates.steps, task, "1", "")
    }

    /// Prompt asking for the substeps of `number`, with the history of
    /// the exchanges that produced its ancestors.
    pub fn substeps_prompt(&self, tree: &StepTree, number: &str) -> Result<String, GlmError> {
        let node = tree.find(number).ok_or_else(|| GlmError::UnknownStep(number.to_string()))?;
        let own = fill(&self.templates.substeps, &tree.task, number, &node.text);
        if !self.templates.include_history {
            return Ok(own);
        }
        let mut parts = alloc::vec![render_exchange(&self.steps_prompt(&tree.task), &tree.steps)];
        let mut chain = Vec::new();
        let mut cur = parent_number(number);
        while let Some(p) = cur {
            chain.push(p);
            cur = parent_number(p);
        }
        for p in chain.into_iter().rev() {
            let n = tree.find(p).unwrap();
            let prompt = fill(&self.templates.substeps, &tree.task, p, &n.text);
            parts.push(render_exchange(&prompt, &n.children));
        }
        parts.push(own);
        Ok(parts.join("\n\n"))
    }

    /// Top-level steps, then `depth - 1` rounds expanding every leaf.
    pub fn query_steps(&mut self, task: &str, depth: usize) -> Result<StepTree, GlmError> {
        if task.trim().is_empty() {
            return Err(GlmError::InvalidPrompt("empty task description".into()));
        }
        if depth == 0 {
            return Err(GlmError::InvalidPrompt("depth must be at least 1".into()));
        }
        let prompt = self.steps_prompt(task);
        let completion = self.complete_text(&prompt)?;
        let mut tree = StepTree::new(task);
        tree.steps = split_completion(&completion, Some("1"), None)?
            .into_iter()
            .map(|(n, t)| StepNode::new(&n, &t))
            .collect();
        for _ in 1..depth {
            for leaf in tree.leaf_numbers() {
                tree = self.query_substeps(&tree, &leaf)?;
            }
        }
        Ok(tree)
    }

    /// Expand one step; other nodes are left alone.
    pub fn query_substeps(&mut self, tree: &StepTree, number: &str) -> Result<StepTree, GlmError> {
        let prompt = self.substeps_prompt(tree, number)?;
        let completion = self.complete_text(&prompt)?;
        let cue = format!("{}.1", number);
        let kids = split_completion(&completion, Some(&cue), Some(number))?;
        let mut out = tree.clone();
        let node = out.find_mut(number).unwrap();
        node.children = kids
            .into_iter()
            .filter(|(n, _)| parent_number(n) == Some(number))
            .map(|(n, t)| StepNode::new(&n, &t))
            .collect();
        Ok(out)
    }

    pub fn query_synonym(&mut self, a: &str, b: &str) -> Judgement {
        if a.trim().is_empty() || b.trim().is_empty() {
            return Err(GlmError::InvalidPrompt("empty phrase".into()));
        }
        if same_phrase(a, b) {
            return Ok((true, "identical phrases".into()));
        }
        let text = self.complete_text(&synonym_prompt(a, b))?;
        verdict(&text)
    }

    /// Judge several pairs; a single pair uses the one-pair prompt.
    pub fn query_synonyms(&mut self, pairs: &[(String, String)]) -> Result<Vec<Judgement>, GlmError> {
        let ask: Vec<(String, String)> = pairs.iter().filter(|(a, b)| !same_phrase(a, b)).cloned().collect();
        let mut answers: Vec<Judgement> = match ask.len() {
            0 => Vec::new(),
            1 => {
                let text = self.complete_text(&synonym_prompt(&ask[0].0, &ask[0].1))?;
                alloc::vec![verdict(&text)]
            }
            n => {
                let text = self.complete_text(&synonym_batch_prompt(&ask))?;
                parse_batch_verdicts(&text, n)
            }
        }
        .into_iter()
        .rev()
        .collect();
        Ok(pairs
            .iter()
            .map(|(a, b)| if same_phrase(a, b) { Ok((true, "identical phrases".into())) } else { answers.pop().unwrap() })
            .collect())
    }

    pub fn refinement_prompt(&self, tree: &StepTree, instruction: &str) -> Result<Prompt, GlmError> {
        if instruction.trim().is_empty() {
            return Err(GlmError::InvalidPrompt("empty instruction".into()));
        }
        let text = format!("{}\n{}\n[1]", refinement_header(instruction), render_steps(&tree.steps));
        Prompt::new(&text, &self.params)
    }

    /// Ask for a revised top-level step list.
    pub fn refine_steps(&mut self, tree: &StepTree, instruction: &str) -> Result<StepTree, GlmError> {
        let prompt = self.refinement_prompt(tree, instruction)?;
        let completion = self.complete(&prompt)?;
        let mut out = StepTree::new(&tree.task);
        out.steps = split_completion(&completion, Some("1"), None)?
            .into_iter()
            .filter(|(n, _)| !n.contains('.'))
            .map(|(n, t)| StepNode::new(&n, &t))
            .collect();
        Ok(out)
    }
}
