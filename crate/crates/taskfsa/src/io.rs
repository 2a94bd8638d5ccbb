//! Versioned JSON documents for controllers, models, specs, sessions,
//! step trees, transcripts and verification reports.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{DeserializeOwned, IgnoredAny};
use serde::{Deserialize, Serialize};
use taskfsa_core::glm::Transcript;
use taskfsa_core::{parse_ltl, Controller, Model, RefinementSession, StepTree, Verdict};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    Controller,
    Model,
    Spec,
    Session,
    Transcript,
    Steps,
    Report,
}

impl fmt::Display for DocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("expected a {expected} document, found {found}")]
    WrongKind { expected: DocKind, found: DocKind },
    #[error("unsupported document version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },
}

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Schema { path: PathBuf, source: SchemaError },
}

/// Values that can be stored as a document.
pub trait Payload: Serialize + DeserializeOwned {
    const KIND: DocKind;

    /// Semantic checks run after a successful parse.
    fn check(&self) -> Result<(), String> {
        Ok(())
    }
}

/// A list of LTL specifications in the textual syntax.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecSet {
    pub specs: Vec<String>,
}

/// Result of verifying one controller against a model and specs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub pass: bool,
    pub verdicts: Vec<Verdict>,
}

impl Payload for Controller {
    const KIND: DocKind = DocKind::Controller;
    fn check(&self) -> Result<(), String> {
        let r = self.validate();
        if r.ok() {
            Ok(())
        } else {
            Err(r.errors.join("; "))
        }
    }
}

impl Payload for Model {
    const KIND: DocKind = DocKind::Model;
    fn check(&self) -> Result<(), String> {
        let r = self.validate();
        if r.ok() {
            Ok(())
        } else {
            Err(r.errors.join("; "))
        }
    }
}

impl Payload for SpecSet {
    const KIND: DocKind = DocKind::Spec;
    fn check(&self) -> Result<(), String> {
        for (i, s) in self.specs.iter().enumerate() {
            parse_ltl(s).map_err(|e| format!("spec {}: {}", i, e))?;
        }
        Ok(())
    }
}

impl Payload for RefinementSession {
    const KIND: DocKind = DocKind::Session;
}

impl Payload for Transcript {
    const KIND: DocKind = DocKind::Transcript;
}

impl Payload for StepTree {
    const KIND: DocKind = DocKind::Steps;
    fn check(&self) -> Result<(), String> {
        self.validate().map_err(|e| e.to_string())
    }
}

impl Payload for Report {
    const KIND: DocKind = DocKind::Report;
}

#[derive(Serialize)]
struct DocOut<'a, T> {
    kind: DocKind,
    version: u32,
    payload: &'a T,
}

#[derive(Deserialize)]
struct Header {
    kind: DocKind,
    version: u32,
    #[allow(dead_code)]
    payload: IgnoredAny,
}

#[derive(Deserialize)]
struct DocIn<T> {
    payload: T,
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

fn parse_with_path<T: DeserializeOwned>(text: &str) -> Result<T, SchemaError> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = pointer(e.path());
        SchemaError::Invalid { path, message: e.into_inner().to_string() }
    })
}

/// Canonical text of a document: pretty JSON with a trailing newline.
pub fn to_text<T: Payload>(value: &T) -> String {
    let doc = DocOut { kind: T::KIND, version: FORMAT_VERSION, payload: value };
    let mut s = serde_json::to_string_pretty(&doc).expect("document values serialize");
    s.push('\n');
    s
}

pub fn from_text<T: Payload>(text: &str) -> Result<T, SchemaError> {
    let header: Header = parse_with_path(text)?;
    if header.version != FORMAT_VERSION {
        return Err(SchemaError::Version { found: header.version, supported: FORMAT_VERSION });
    }
    if header.kind != T::KIND {
        return Err(SchemaError::WrongKind { expected: T::KIND, found: header.kind });
    }
    let doc: DocIn<T> = parse_with_path(text)?;
    doc.payload.check().map_err(|message| SchemaError::Invalid { path: "/payload".into(), message })?;
    Ok(doc.payload)
}

pub fn read_doc<T: Payload>(path: &Path) -> Result<T, DocError> {
    let text = std::fs::read_to_string(path).map_err(|source| DocError::Io { path: path.to_path_buf(), source })?;
    from_text(&text).map_err(|source| DocError::Schema { path: path.to_path_buf(), source })
}

pub fn write_doc<T: Payload>(path: &Path, value: &T) -> Result<(), DocError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|source| DocError::Io { path: dir.to_path_buf(), source })?;
        }
    }
    std::fs::write(path, to_text(value)).map_err(|source| DocError::Io { path: path.to_path_buf(), source })
}

/// Transcript location: a file, or a directory holding `transcript.json`.
pub fn transcript_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("transcript.json")
    } else {
        path.to_path_buf()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_and_kind_are_checked() {
        let text = to_text(&SpecSet { specs: vec!["F goal".into()] });
        assert_eq!(from_text::<SpecSet>(&text).unwrap().specs, vec!["F goal".to_string()]);
        let bumped = text.replace("\"version\": 1", "\"version\": 7");
        assert!(matches!(from_text::<SpecSet>(&bumped), Err(SchemaError::Version { found: 7, .. })));
        assert!(matches!(from_text::<Transcript>(&text), Err(SchemaError::WrongKind { .. })));
    }

    #[test]
    fn errors_carry_a_pointer() {
        let text = r#"{"kind": "spec", "version": 1, "payload": {"specs": ["F goal", 3]}}"#;
        match from_text::<SpecSet>(text) {
            Err(SchemaError::Invalid { path, .. }) => assert_eq!(path, "/payload/specs/1"),
            other => panic!("{:?}", other),
        }
        let text = r#"{"kind": "spec", "version": 1, "payload": {"specs": ["F (goal"]}}"#;
        assert!(matches!(from_text::<SpecSet>(text), Err(SchemaError::Invalid { .. })));
    }
}
