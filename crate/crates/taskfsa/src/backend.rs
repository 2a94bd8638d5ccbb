//! HTTP completion backend.

use std::thread::sleep;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde_json::json;
use taskfsa_core::glm::{Backend, GlmError, Prompt, Reply};

pub const ENDPOINT_VAR: &str = "TASKFSA_GLM_ENDPOINT";
pub const API_KEY_VAR: &str = "TASKFSA_GLM_API_KEY";
pub const MODEL_VAR: &str = "TASKFSA_GLM_MODEL";

/// Completion client for an OpenAI-style `/completions` endpoint. Keyword
/// biases are sent by word; the endpoint is expected to map them to
/// tokens.
pub struct LiveBackend {
    endpoint: String,
    api_key: Option<String>,
    model: Option<String>,
    attempts: u32,
    backoff: Duration,
}

impl LiveBackend {
    pub fn new(endpoint: &str, api_key: Option<String>) -> Self {
        LiveBackend { endpoint: endpoint.to_string(), api_key, model: None, attempts: 3, backoff: Duration::from_millis(500) }
    }

    /// Endpoint, key and model name from the environment.
    pub fn from_env() -> Result<Self, GlmError> {
        let endpoint = std::env::var(ENDPOINT_VAR)
            .map_err(|_| GlmError::BackendUnavailable { attempts: 0, detail: format!("{} is not set", ENDPOINT_VAR) })?;
        let mut b = LiveBackend::new(&endpoint, std::env::var(API_KEY_VAR).ok());
        b.model = std::env::var(MODEL_VAR).ok();
        Ok(b)
    }

    pub fn with_retries(mut self, attempts: u32, backoff: Duration) -> Self {
        self.attempts = attempts.max(1);
        self.backoff = backoff;
        self
    }

    fn request(&self, prompt: &Prompt) -> Result<String, String> {
        let mut body = json!({
            "prompt": prompt.text,
            "max_tokens": prompt.params.max_tokens,
            "temperature": prompt.params.temperature,
            "keyword_bias": prompt.params.keyword_bias,
        });
        if let Some(m) = &self.model {
            body["model"] = json!(m);
        }
        let mut req = ureq::post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {}", key));
        }
        let mut resp = req.send_json(&body).map_err(|e| e.to_string())?;
        let v: serde_json::Value = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        v.pointer("/choices/0/text")
            .or_else(|| v.get("text"))
            .and_then(|t| t.as_str())
            .map(str::to_string)
            .ok_or_else(|| "response has no completion text".to_string())
    }
}

impl Backend for LiveBackend {
    fn id(&self) -> String {
        match &self.model {
            Some(m) => format!("live:{}", m),
            None => "live".into(),
        }
    }

    fn complete(&mut self, prompt: &Prompt) -> Result<Reply, GlmError> {
        let mut detail = String::new();
        for attempt in 0..self.attempts {
            if attempt > 0 {
                sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            match self.request(prompt) {
                Ok(text) => {
                    let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).ok();
                    return Ok(Reply { text, timestamp: ts });
                }
                Err(e) => {
                    log::warn!("completion attempt {} failed: {}", attempt + 1, e);
                    detail = e;
                }
            }
        }
        Err(GlmError::BackendUnavailable { attempts: self.attempts, detail })
    }
}
