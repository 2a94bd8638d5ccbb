//! The batch pipeline: query steps, build, verify.

use taskfsa_core::builder::{build_from_texts, build_tree_spliced, merge_branches, BuildError};
use taskfsa_core::product::DeadlockPolicy;
use taskfsa_core::stepparse::StepParser;
use taskfsa_core::{check, parse_ltl, CheckError, CheckOptions, Controller, Glm, GlmError, Model, StepTree};

use crate::io::Report;

/// Top-level steps, `depth - 1` full expansion rounds, then the listed
/// steps expanded one by one.
pub fn query_tree(glm: &mut Glm, task: &str, depth: usize, expand: &[String]) -> Result<StepTree, GlmError> {
    let mut tree = glm.query_steps(task, depth)?;
    for n in expand {
        tree = glm.query_substeps(&tree, n)?;
    }
    Ok(tree)
}

/// Controller for a step tree. Expanded steps are spliced into their
/// parent's place unless `flat`, in which case the leaves are read as one
/// step list.
pub fn build(tree: &StepTree, flat: bool) -> Result<Controller, BuildError> {
    let parser = StepParser::new();
    if flat {
        let leaves = tree.leaf_numbers();
        build_from_texts(&parser, &tree.texts(&leaves)).map(|(c, _)| c)
    } else {
        build_tree_spliced(&parser, tree)
    }
}

/// One controller choosing between two step trees on proposition `prop`.
pub fn build_alternatives(prop: &str, when_true: &StepTree, when_false: &StepTree, flat: bool) -> Result<Controller, BuildError> {
    Ok(merge_branches(prop, &build(when_true, flat)?, &build(when_false, flat)?))
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("spec {index}: {message}")]
    Spec { index: usize, message: String },
    #[error(transparent)]
    Check(#[from] CheckError),
}

pub fn verify(model: &Model, controller: &Controller, specs: &[String], deadlock: DeadlockPolicy) -> Result<Report, VerifyError> {
    let mut verdicts = Vec::new();
    for (index, s) in specs.iter().enumerate() {
        let f = parse_ltl(s).map_err(|e| VerifyError::Spec { index, message: e.to_string() })?;
        verdicts.push(check(model, controller, &f, CheckOptions { deadlock })?);
    }
    Ok(Report { pass: verdicts.iter().all(|v| v.pass), verdicts })
}
