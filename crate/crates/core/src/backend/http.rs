//! Remote completion backend speaking an OpenAI-style JSON API.

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{BackendError, BackendKind, CompletionBackend, CompletionParams, PromptId};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

/// Request/response shape of the remote API.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiStyle {
    /// `{"messages": [...]}` in, `choices[0].message.content` out.
    #[default]
    Chat,
    /// `{"prompt": "..."}` in, `choices[0].text` out.
    Completions,
}

#[derive(Debug, Clone)]
pub struct HttpBackendConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub style: ApiStyle,
    pub timeout: Duration,
    /// Extra attempts after a transient failure.
    pub retries: u32,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("environment variable {var} is not set; it must hold the backend API key")]
    MissingCredential { var: String },
}

impl HttpBackendConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: None,
            style: ApiStyle::default(),
            timeout: DEFAULT_TIMEOUT,
            retries: 1,
        }
    }

    /// Read the API key from the named environment variable.
    pub fn with_key_from_env(mut self, var: &str) -> Result<Self, ConfigError> {
        match std::env::var(var) {
            Ok(key) if !key.trim().is_empty() => {
                self.api_key = Some(key);
                Ok(self)
            }
            _ => Err(ConfigError::MissingCredential {
                var: var.to_owned(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HttpBackend {
    client: reqwest::Client,
    config: HttpBackendConfig,
}

enum Attempt {
    Done(String),
    Transient(BackendError),
    Fatal(BackendError),
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Self {
        Self {
            client: reqwest::Client::new(),
            config,
        }
    }

    fn body(&self, prompt: &str, params: &CompletionParams) -> Value {
        match self.config.style {
            ApiStyle::Chat => json!({
                "model": params.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": params.temperature,
                "max_tokens": params.max_tokens,
            }),
            ApiStyle::Completions => json!({
                "model": params.model,
                "prompt": prompt,
                "temperature": params.temperature,
                "max_tokens": params.max_tokens,
            }),
        }
    }

    fn extract(&self, body: &Value) -> Option<String> {
        let choice = body.get("choices")?.get(0)?;
        let text = match self.config.style {
            ApiStyle::Chat => choice.get("message")?.get("content")?,
            ApiStyle::Completions => choice.get("text")?,
        };
        text.as_str().map(str::to_owned)
    }

    async fn attempt(&self, prompt: &str, params: &CompletionParams, id: &PromptId) -> Attempt {
        let mut req = self
            .client
            .post(&self.config.endpoint)
            .timeout(self.config.timeout)
            .json(&self.body(prompt, params));
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let timeout = || BackendError::Timeout {
            prompt_id: id.clone(),
            seconds: self.config.timeout.as_secs_f64(),
        };
        let resp = match req.send().await {
            Ok(resp) => resp,
            Err(e) if e.is_timeout() => return Attempt::Transient(timeout()),
            Err(e) => {
                return Attempt::Transient(BackendError::Transport {
                    prompt_id: id.clone(),
                    message: e.to_string(),
                })
            }
        };
        let status = resp.status();
        if status.as_u16() == 429 {
            return Attempt::Transient(BackendError::RateLimited {
                prompt_id: id.clone(),
            });
        }
        let text = match resp.text().await {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Attempt::Transient(timeout()),
            Err(e) => {
                return Attempt::Transient(BackendError::Transport {
                    prompt_id: id.clone(),
                    message: e.to_string(),
                })
            }
        };
        if !status.is_success() {
            let err = BackendError::Rejected {
                prompt_id: id.clone(),
                status: Some(status.as_u16()),
                message: truncate(&text, 500),
            };
            return if status.is_server_error() {
                Attempt::Transient(err)
            } else {
                Attempt::Fatal(err)
            };
        }
        let parsed = serde_json::from_str::<Value>(&text)
            .ok()
            .and_then(|v| self.extract(&v));
        match parsed {
            Some(content) => Attempt::Done(content),
            None => Attempt::Fatal(BackendError::Rejected {
                prompt_id: id.clone(),
                status: Some(status.as_u16()),
                message: format!("unexpected response body: {}", truncate(&text, 200)),
            }),
        }
    }
}

fn truncate(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_owned(),
    }
}

#[async_trait]
impl CompletionBackend for HttpBackend {
    async fn complete(
        &self,
        prompt: &str,
        params: &CompletionParams,
    ) -> Result<String, BackendError> {
        if prompt.is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        let id = PromptId::of(prompt);
        let mut tries_left = self.config.retries;
        loop {
            match self.attempt(prompt, params, &id).await {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Transient(e) if tries_left == 0 => return Err(e),
                Attempt::Transient(_) => tries_left -= 1,
            }
        }
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }
}
