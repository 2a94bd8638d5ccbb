//! Pipeline settings read from a TOML file and overridden by flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use taskfsa_core::glm::{Backend, Glm, Params, PromptTemplates, ReplayBackend, Transcript, DEFAULT_KEYWORDS};
use taskfsa_core::product::DeadlockPolicy;
use taskfsa_core::refine::SessionConfig;

use crate::backend::LiveBackend;
use crate::io::{read_doc, transcript_path, DocError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Replay,
    Live,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub backend: BackendKind,
    /// Transcript file or directory for the replay backend.
    pub transcript: Option<PathBuf>,
    pub depth: usize,
    pub max_depth: usize,
    /// Steps to expand after the top-level query, in order.
    pub expand: Vec<String>,
    pub keywords: Vec<String>,
    pub keyword_bias: i32,
    /// Per-keyword overrides of `keyword_bias`.
    pub bias: BTreeMap<String, i32>,
    pub max_tokens: u32,
    pub temperature: f64,
    pub model: Option<PathBuf>,
    pub specs: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub deadlock: DeadlockPolicy,
    pub templates: PromptTemplates,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let p = Params::default();
        PipelineConfig {
            backend: BackendKind::Replay,
            transcript: None,
            depth: 1,
            max_depth: 3,
            expand: Vec::new(),
            keywords: DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect(),
            keyword_bias: 5,
            bias: BTreeMap::new(),
            max_tokens: p.max_tokens,
            temperature: p.temperature,
            model: None,
            specs: Vec::new(),
            out: None,
            deadlock: DeadlockPolicy::Stutter,
            templates: PromptTemplates::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error(transparent)]
    Doc(#[from] DocError),
    #[error(transparent)]
    Backend(#[from] taskfsa_core::GlmError),
}

impl PipelineConfig {
    /// Load a config file; relative paths in it are taken from the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File { path: path.into(), message: e.to_string() })?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| ConfigError::File { path: path.into(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.transcript.as_mut().map(fix);
        cfg.model.as_mut().map(fix);
        cfg.out.as_mut().map(fix);
        cfg.specs.iter_mut().for_each(fix);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.backend == BackendKind::Replay && self.transcript.is_none() {
            return Err(ConfigError::Invalid("the replay backend needs a transcript path".into()));
        }
        if self.depth == 0 {
            return Err(ConfigError::Invalid("depth must be at least 1".into()));
        }
        if self.depth > self.max_depth {
            return Err(ConfigError::Invalid(format!("depth {} exceeds max depth {}", self.depth, self.max_depth)));
        }
        Ok(())
    }

    pub fn params(&self) -> Params {
        let mut keyword_bias: BTreeMap<String, i32> = self.keywords.iter().map(|k| (k.clone(), self.keyword_bias)).collect();
        keyword_bias.extend(self.bias.iter().map(|(k, v)| (k.clone(), *v)));
        Params { max_tokens: self.max_tokens, temperature: self.temperature, keyword_bias }
    }

    pub fn backend(&self) -> Result<Box<dyn Backend>, ConfigError> {
        self.validate()?;
        Ok(match self.backend {
            BackendKind::Replay => {
                let path = transcript_path(self.transcript.as_ref().unwrap());
                let t: Transcript = read_doc(&path)?;
                Box::new(ReplayBackend::new(&t))
            }
            BackendKind::Live => Box::new(LiveBackend::from_env()?),
        })
    }

    pub fn glm(&self) -> Result<Glm, ConfigError> {
        let mut glm = Glm::new(self.backend()?).with_templates(self.templates.clone());
        glm.params = self.params();
        Ok(glm)
    }

    pub fn session_config(&self) -> SessionConfig {
        SessionConfig { max_depth: self.max_depth, deadlock: self.deadlock, templates: self.templates.clone() }
    }
}
