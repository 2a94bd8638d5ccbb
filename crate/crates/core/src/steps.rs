//! Hierarchical step lists as returned by the language model.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepNode {
    /// Dotted number such as "2" or "2.1".
    pub number: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<StepNode>,
}

impl StepNode {
    pub fn new(number: &str, text: &str) -> Self {
        StepNode { number: number.to_string(), text: text.to_string(), children: Vec::new() }
    }

    pub fn depth(&self) -> usize {
        self.number.split('.').count()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepTree {
    pub task: String,
    pub steps: Vec<StepNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StepTreeError {
    #[error("step numbering under '{parent}' is not contiguous from 1: {found}")]
    BadNumbering { parent: String, found: String },
}

fn visit<'a>(nodes: &'a [StepNode], out: &mut Vec<&'a StepNode>) {
    for n in nodes {
        out.push(n);
        visit(&n.children, out);
    }
}

impl StepTree {
    pub fn new(task: &str) -> Self {
        StepTree { task: task.to_string(), steps: Vec::new() }
    }

    /// All nodes in document (pre-)order.
    pub fn nodes(&self) -> Vec<&StepNode> {
        let mut out = Vec::new();
        visit(&self.steps, &mut out);
        out
    }

    pub fn find(&self, number: &str) -> Option<&StepNode> {
        self.nodes().into_iter().find(|n| n.number == number)
    }

    pub fn find_mut(&mut self, number: &str) -> Option<&mut StepNode> {
        fn go<'a>(nodes: &'a mut [StepNode], number: &str) -> Option<&'a mut StepNode> {
            for n in nodes {
                if n.number == number {
                    return Some(n);
                }
                if number.starts_with(&alloc::format!("{}.", n.number)) {
                    return go(&mut n.children, number);
                }
            }
            None
        }
        go(&mut self.steps, number)
    }

    pub fn depth(&self) -> usize {
        self.nodes().iter().map(|n| n.depth()).max().unwrap_or(0)
    }

    /// Leaves in document order.
    pub fn leaves(&self) -> Vec<&StepNode> {
        self.nodes().into_iter().filter(|n| n.children.is_empty()).collect()
    }

    pub fn leaf_numbers(&self) -> Vec<String> {
        self.leaves().iter().map(|n| n.number.clone()).collect()
    }

    /// (number, text) for the given step numbers.
    pub fn texts(&self, numbers: &[String]) -> Vec<(String, String)> {
        numbers
            .iter()
            .filter_map(|k| self.find(k).map(|n| (n.number.clone(), n.text.clone())))
            .collect()
    }

    /// Check numbering: children of "k" are "k.1", "k.2", ... in order.
    pub fn validate(&self) -> Result<(), StepTreeError> {
        fn check(parent: &str, nodes: &[StepNode]) -> Result<(), StepTreeError> {
            for (i, n) in nodes.iter().enumerate() {
                let want = if parent.is_empty() { alloc::format!("{}", i + 1) } else { alloc::format!("{}.{}", parent, i + 1) };
                if n.number != want {
                    return Err(StepTreeError::BadNumbering { parent: parent.to_string(), found: n.number.clone() });
                }
                check(&n.number, &n.children)?;
            }
            Ok(())
        }
        check("", &self.steps)
    }
}

/// Dotted number of the parent step, if any.
pub fn parent_number(number: &str) -> Option<&str> {
    number.rfind('.').map(|i| &number[..i])
}
