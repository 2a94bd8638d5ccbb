//! Synonym consolidation and the refinement loop: manual instructions,
//! automatic substep expansion, and pruning.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::builder::{build_frontier, BuildError};
use crate::check::{check, CheckError, CheckOptions, Verdict};
use crate::controller::Controller;
use crate::glm::{Glm, GlmError, PromptTemplates};
use crate::ltl::{parse_ltl, Ltl, LtlSyntaxError};
use crate::model::Model;
use crate::product::DeadlockPolicy;
use crate::stepparse::StepParser;
use crate::steps::{parent_number, StepTree};

/// Phrase rewriting towards canonical wording; canonical phrases map to
/// themselves.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SynonymMap {
    map: BTreeMap<String, String>,
}

impl SynonymMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get<'a>(&'a self, phrase: &'a str) -> &'a str {
        self.map.get(phrase).map(|s| s.as_str()).unwrap_or(phrase)
    }

    pub fn apply(&self, phrase: &str) -> String {
        self.get(phrase).to_string()
    }

    /// Record `from` as a synonym of `to`. Returns false if `from` already
    /// has a canonical form or `to` is itself being rewritten.
    pub fn insert(&mut self, from: &str, to: &str) -> bool {
        let to = self.get(to).to_string();
        if from == to || self.map.contains_key(from) {
            return false;
        }
        for v in self.map.values_mut() {
            if v == from {
                *v = to.clone();
            }
        }
        self.map.insert(from.to_string(), to);
        true
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.map.iter()
    }

    pub fn apply_controller(&self, c: &Controller) -> Controller {
        if self.map.is_empty() {
            return c.clone();
        }
        c.rename(&|p| self.apply(p))
    }
}

/// Answers already obtained, keyed by (controller phrase, model phrase).
pub type JudgedPairs = BTreeMap<(String, String), bool>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Consolidation {
    pub controller: Controller,
    pub map: SynonymMap,
    /// Number of pairs sent to the model in this call.
    pub queried: usize,
    pub notes: Vec<String>,
}

fn words(p: &str) -> BTreeSet<&str> {
    p.split(' ').collect()
}

/// Pairs (controller phrase, model phrase) worth asking about: the
/// controller phrase is unknown to the model and they share a word.
pub fn candidate_pairs(c: &Controller, m: &Model) -> Vec<(String, String)> {
    let (props, acts) = c.used_vocabulary();
    let mut out = Vec::new();
    for (mine, theirs) in [(&acts, &m.action_props), (&props, &m.label_props)] {
        for a in mine.iter() {
            if theirs.contains(a) {
                continue;
            }
            let wa = words(a);
            for b in theirs.iter() {
                if words(b).iter().any(|w| wa.contains(w)) {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
    }
    out
}

/// Ask the model which controller phrases mean the same as model phrases
/// and rewrite the controller to the model's wording.
pub fn consolidate_synonyms(
    glm: &mut Glm,
    c: &Controller,
    m: &Model,
    surfaces: &BTreeMap<String, String>,
    judged: &mut JudgedPairs,
) -> Result<Consolidation, GlmError> {
    let pairs = candidate_pairs(c, m);
    let fresh: Vec<(String, String)> = pairs.iter().filter(|p| !judged.contains_key(*p)).cloned().collect();
    let mut notes = Vec::new();
    if !fresh.is_empty() {
        let worded: Vec<(String, String)> = fresh
            .iter()
            .map(|(a, b)| {
                (
                    surfaces.get(a).cloned().unwrap_or_else(|| a.clone()),
                    m.surface.get(b).cloned().unwrap_or_else(|| b.clone()),
                )
            })
            .collect();
        let answers = glm.query_synonyms(&worded)?;
        for (pair, ans) in fresh.iter().zip(answers) {
            match ans {
                Ok((same, _)) => {
                    judged.insert(pair.clone(), same);
                }
                Err(e) => notes.push(format!("\"{}\" / \"{}\" left distinct: {}", pair.0, pair.1, e)),
            }
        }
    }
    let mut map = SynonymMap::new();
    for pair in &pairs {
        if judged.get(pair) == Some(&true) && map.insert(&pair.0, &pair.1) {
            notes.push(format!("\"{}\" -> \"{}\"", pair.0, pair.1));
        }
    }
    Ok(Consolidation { controller: map.apply_controller(c), map, queried: fresh.len(), notes })
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RefineError {
    #[error(transparent)]
    Glm(#[from] GlmError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("specification {index}: {error}")]
    Spec { index: usize, error: LtlSyntaxError },
    #[error("operation needs status {expected}, session is {actual}")]
    WrongStatus { expected: &'static str, actual: SessionStatus },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Pass,
    Fail,
    /// Automatic expansion reached the depth bound while still failing.
    Unrepresentable,
}

impl core::fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            SessionStatus::Pass => "pass",
            SessionStatus::Fail => "fail",
            SessionStatus::Unrepresentable => "unrepresentable",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationKind {
    Initial,
    Manual,
    Expand,
    Prune,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Iteration {
    pub kind: IterationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    pub frontier: Vec<String>,
    pub controller: Controller,
    pub verdicts: Vec<Verdict>,
    pub status: SessionStatus,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub max_depth: usize,
    pub deadlock: DeadlockPolicy,
    pub templates: PromptTemplates,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig { max_depth: 3, deadlock: DeadlockPolicy::Stutter, templates: PromptTemplates::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementSession {
    pub task: String,
    pub config: SessionConfig,
    pub model: Model,
    pub specs: Vec<String>,
    pub tree: StepTree,
    /// Steps currently represented by controller states.
    pub frontier: Vec<String>,
    pub depth: usize,
    pub synonyms: SynonymMap,
    #[serde(with = "judged_serde")]
    pub judged: JudgedPairs,
    pub history: Vec<Iteration>,
}

mod judged_serde {
    use super::JudgedPairs;
    use alloc::string::String;
    use alloc::vec::Vec;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row {
        controller: String,
        model: String,
        same: bool,
    }

    pub fn serialize<S: Serializer>(j: &JudgedPairs, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Row> = j.iter().map(|((a, b), v)| Row { controller: a.clone(), model: b.clone(), same: *v }).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<JudgedPairs, D::Error> {
        let rows: Vec<Row> = Vec::deserialize(d)?;
        Ok(rows.into_iter().map(|r| ((r.controller, r.model), r.same)).collect())
    }
}

fn parse_specs(specs: &[String]) -> Result<Vec<Ltl>, RefineError> {
    specs.iter().enumerate().map(|(index, s)| parse_ltl(s).map_err(|error| RefineError::Spec { index, error })).collect()
}

/// Action phrase id -> step wording, for synonym prompts.
fn surfaces(parser: &StepParser, tree: &StepTree, frontier: &[String]) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for (n, text) in tree.texts(frontier) {
        if let Ok(p) = parser.parse_step(&n, &text) {
            if p.acts.0.len() == 1 {
                let wording = text.trim().trim_end_matches(['.', '!', ';']).to_string();
                out.entry(p.acts.iter().next().unwrap().clone()).or_insert(wording);
            }
        }
    }
    out
}

struct Evaluation {
    controller: Controller,
    verdicts: Vec<Verdict>,
    status: SessionStatus,
}

impl RefinementSession {
    /// Query the top-level steps for `task` and verify the first controller.
    pub fn start(
        glm: &mut Glm,
        parser: &StepParser,
        task: &str,
        model: Model,
        specs: Vec<String>,
        config: SessionConfig,
    ) -> Result<Self, RefineError> {
        parse_specs(&specs)?;
        glm.templates = config.templates.clone();
        let tree = glm.query_steps(task, 1)?;
        Self::from_tree(glm, parser, tree, model, specs, config)
    }

    /// Start from steps obtained elsewhere.
    pub fn from_tree(
        glm: &mut Glm,
        parser: &StepParser,
        tree: StepTree,
        model: Model,
        specs: Vec<String>,
        config: SessionConfig,
    ) -> Result<Self, RefineError> {
        parse_specs(&specs)?;
        let frontier = tree.leaf_numbers();
        let depth = tree.depth().max(1);
        let mut s = RefinementSession {
            task: tree.task.clone(),
            config,
            model,
            specs,
            tree,
            frontier,
            depth,
            synonyms: SynonymMap::new(),
            judged: JudgedPairs::new(),
            history: Vec::new(),
        };
        let mut judged = s.judged.clone();
        let (tree, frontier) = (s.tree.clone(), s.frontier.clone());
        let e = s.evaluate(glm, parser, &tree, &frontier, &mut judged)?;
        s.judged = judged;
        s.push(IterationKind::Initial, None, None, e);
        Ok(s)
    }

    pub fn latest(&self) -> &Iteration {
        self.history.last().expect("session has an initial iteration")
    }

    pub fn status(&self) -> SessionStatus {
        self.latest().status
    }

    pub fn controller(&self) -> &Controller {
        &self.latest().controller
    }

    fn push(&mut self, kind: IterationKind, instruction: Option<String>, prompt: Option<String>, e: Evaluation) {
        self.history.push(Iteration {
            kind,
            instruction,
            prompt,
            frontier: self.frontier.clone(),
            controller: e.controller,
            verdicts: e.verdicts,
            status: e.status,
        });
    }

    fn verify(&self, c: &Controller) -> Result<(Vec<Verdict>, SessionStatus), RefineError> {
        let opts = CheckOptions { deadlock: self.config.deadlock };
        let mut verdicts = Vec::new();
        for spec in parse_specs(&self.specs)? {
            verdicts.push(check(&self.model, c, &spec, opts)?);
        }
        let status = if verdicts.iter().all(|v| v.pass) { SessionStatus::Pass } else { SessionStatus::Fail };
        Ok((verdicts, status))
    }

    /// Build, consolidate wording against the model, verify.
    fn evaluate(
        &mut self,
        glm: &mut Glm,
        parser: &StepParser,
        tree: &StepTree,
        frontier: &[String],
        judged: &mut JudgedPairs,
    ) -> Result<Evaluation, RefineError> {
        let (raw, _) = build_frontier(parser, tree, frontier)?;
        let cons = consolidate_synonyms(glm, &raw, &self.model, &surfaces(parser, tree, frontier), judged)?;
        for (a, b) in cons.map.iter() {
            self.synonyms.insert(a, b);
        }
        let (verdicts, status) = self.verify(&cons.controller)?;
        Ok(Evaluation { controller: cons.controller, verdicts, status })
    }

    /// Rebuild from steps revised by the model according to `instruction`.
    /// The session is left untouched on error.
    pub fn manual_refine(&mut self, glm: &mut Glm, parser: &StepParser, instruction: &str) -> Result<(), RefineError> {
        if self.status() != SessionStatus::Fail {
            return Err(RefineError::WrongStatus { expected: "fail", actual: self.status() });
        }
        glm.templates = self.config.templates.clone();
        let prompt = glm.refinement_prompt(&self.tree, instruction)?;
        let tree = glm.refine_steps(&self.tree, instruction)?;
        let frontier = tree.leaf_numbers();
        let mut judged = self.judged.clone();
        let saved = self.synonyms.clone();
        let e = match self.evaluate(glm, parser, &tree, &frontier, &mut judged) {
            Ok(e) => e,
            Err(err) => {
                self.synonyms = saved;
                return Err(err);
            }
        };
        self.judged = judged;
        self.tree = tree;
        self.frontier = frontier;
        self.depth = 1;
        self.push(IterationKind::Manual, Some(instruction.to_string()), Some(prompt.text), e);
        Ok(())
    }

    /// Expand every frontier step of the deepest layer until all specs
    /// pass or the depth bound is reached.
    pub fn auto_refine(&mut self, glm: &mut Glm, parser: &StepParser) -> Result<(), RefineError> {
        glm.templates = self.config.templates.clone();
        while self.status() == SessionStatus::Fail {
            if self.depth >= self.config.max_depth {
                let mut last = self.latest().clone();
                last.status = SessionStatus::Unrepresentable;
                last.kind = IterationKind::Expand;
                self.history.push(last);
                break;
            }
            let deepest = self.frontier.iter().map(|n| n.split('.').count()).max().unwrap_or(1);
            let mut tree = self.tree.clone();
            for n in self.frontier.iter().filter(|n| n.split('.').count() == deepest) {
                if tree.find(n).is_none_or(|node| node.children.is_empty()) {
                    tree = glm.query_substeps(&tree, n)?;
                }
            }
            let mut frontier = Vec::new();
            for n in &self.frontier {
                let node = tree.find(n).unwrap();
                if n.split('.').count() == deepest && !node.children.is_empty() {
                    frontier.extend(node.children.iter().map(|c| c.number.clone()));
                } else {
                    frontier.push(n.clone());
                }
            }
            let mut judged = self.judged.clone();
            let e = self.evaluate(glm, parser, &tree, &frontier, &mut judged)?;
            self.judged = judged;
            self.tree = tree;
            self.frontier = frontier;
            self.depth = deepest + 1;
            self.push(IterationKind::Expand, None, None, e);
        }
        Ok(())
    }

    /// Collapse expanded steps back into their parents, deepest layer
    /// first and in document order, whenever every spec still passes.
    pub fn prune(&mut self, glm: &mut Glm, parser: &StepParser) -> Result<(), RefineError> {
        if self.status() != SessionStatus::Pass {
            return Err(RefineError::WrongStatus { expected: "pass", actual: self.status() });
        }
        let mut changed = false;
        let mut best: Option<Evaluation> = None;
        let max_layer = self.frontier.iter().map(|n| n.split('.').count()).max().unwrap_or(1);
        for layer in (2..=max_layer).rev() {
            let mut parents: Vec<String> = Vec::new();
            for n in &self.frontier {
                if n.split('.').count() == layer {
                    let p = parent_number(n).unwrap().to_string();
                    if !parents.contains(&p) {
                        parents.push(p);
                    }
                }
            }
            for p in parents {
                let prefix = format!("{}.", p);
                let Some(pos) = self.frontier.iter().position(|n| n.starts_with(&prefix)) else { continue };
                let mut candidate: Vec<String> = self.frontier.iter().filter(|n| !n.starts_with(&prefix)).cloned().collect();
                candidate.insert(pos, p.clone());
                let mut judged = self.judged.clone();
                let tree = self.tree.clone();
                let e = self.evaluate(glm, parser, &tree, &candidate, &mut judged)?;
                self.judged = judged;
                if e.status == SessionStatus::Pass {
                    self.frontier = candidate;
                    best = Some(e);
                    changed = true;
                }
            }
        }
        if changed {
            let e = best.unwrap();
            self.depth = self.frontier.iter().map(|n| n.split('.').count()).max().unwrap_or(1);
            self.push(IterationKind::Prune, None, None, e);
        }
        Ok(())
    }

    /// Verify the current controller again (e.g. after editing specs).
    pub fn reverify(&mut self) -> Result<&Iteration, RefineError> {
        let c = self.controller().clone();
        let (verdicts, status) = self.verify(&c)?;
        let last = self.history.last_mut().unwrap();
        last.verdicts = verdicts;
        last.status = status;
        Ok(last)
    }
}
