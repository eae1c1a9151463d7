//! Deterministic rule-table backend.
//!
//! Rules are checked in order; the first rule whose `contains` substring
//! occurs in the prompt decides the outcome. Unmatched prompts get the
//! default response.

use std::path::Path;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{BackendError, BackendKind, CompletionBackend, CompletionParams, PromptId};

pub const DEFAULT_MOCK_RESPONSE: &str = "MOCK RESPONSE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Timeout,
    RateLimited,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    pub contains: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail: Option<FailureKind>,
    /// Artificial latency before answering.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_ms: Option<u64>,
}

/// On-disk form of a rule table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default)]
    pub rules: Vec<MockRule>,
    #[serde(default = "default_response")]
    pub default: String,
}

fn default_response() -> String {
    DEFAULT_MOCK_RESPONSE.to_owned()
}

impl Default for MockScript {
    fn default() -> Self {
        Self {
            rules: Vec::new(),
            default: default_response(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("cannot read mock rules {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid mock rules: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("rule {index} must set exactly one of `response` or `fail`")]
    Ambiguous { index: usize },
}

#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    script: MockScript,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_script(script: MockScript) -> Result<Self, ScriptError> {
        for (index, rule) in script.rules.iter().enumerate() {
            if rule.response.is_some() == rule.fail.is_some() {
                return Err(ScriptError::Ambiguous { index });
            }
        }
        Ok(Self { script })
    }

    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        Self::from_script(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self, ScriptError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScriptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn rule(mut self, contains: impl Into<String>, response: impl Into<String>) -> Self {
        self.script.rules.push(MockRule {
            contains: contains.into(),
            response: Some(response.into()),
            fail: None,
            delay_ms: None,
        });
        self
    }

    pub fn failing_rule(mut self, contains: impl Into<String>, fail: FailureKind) -> Self {
        self.script.rules.push(MockRule {
            contains: contains.into(),
            response: None,
            fail: Some(fail),
            delay_ms: None,
        });
        self
    }

    /// Delay the most recently added rule.
    pub fn delayed(mut self, delay: Duration) -> Self {
        if let Some(last) = self.script.rules.last_mut() {
            last.delay_ms = Some(delay.as_millis() as u64);
        }
        self
    }

    pub fn with_default(mut self, response: impl Into<String>) -> Self {
        self.script.default = response.into();
        self
    }

    pub fn script(&self) -> &MockScript {
        &self.script
    }
}

#[async_trait]
impl CompletionBackend for ScriptedBackend {
    async fn complete(
        &self,
        prompt: &str,
        _params: &CompletionParams,
    ) -> Result<String, BackendError> {
        if prompt.is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        let Some(rule) = self
            .script
            .rules
            .iter()
            .find(|r| prompt.contains(r.contains.as_str()))
        else {
            return Ok(self.script.default.clone());
        };
        if let Some(ms) = rule.delay_ms {
            tokio::time::sleep(Duration::from_millis(ms)).await;
        }
        let prompt_id = PromptId::of(prompt);
        match (rule.fail, &rule.response) {
            (Some(FailureKind::Timeout), _) => Err(BackendError::Timeout {
                prompt_id,
                seconds: 0.0,
            }),
            (Some(FailureKind::RateLimited), _) => Err(BackendError::RateLimited { prompt_id }),
            (Some(FailureKind::Rejected), _) => Err(BackendError::Rejected {
                prompt_id,
                status: None,
                message: "scripted rejection".into(),
            }),
            (None, Some(text)) => Ok(text.clone()),
            (None, None) => Ok(self.script.default.clone()),
        }
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Scripted
    }
}
