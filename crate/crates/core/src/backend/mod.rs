//! Text-completion backends.
//!
//! Every completion in the system goes through [`CompletionBackend`]. Two
//! implementations exist: [`HttpBackend`] for a remote JSON completion API
//! and [`ScriptedBackend`], a deterministic rule table for tests and demos.

mod http;
mod scripted;

use std::sync::Arc;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use http::{
    ApiStyle, ConfigError as HttpConfigError, HttpBackend, HttpBackendConfig, DEFAULT_API_KEY_ENV,
    DEFAULT_TIMEOUT,
};
pub use scripted::{FailureKind, MockRule, MockScript, ScriptError, ScriptedBackend, DEFAULT_MOCK_RESPONSE};

pub const DEFAULT_TEMPERATURE: f64 = 0.25;
pub const DEFAULT_MAX_TOKENS: u32 = 1000;
pub const DEFAULT_CHAT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_REWRITE_MODEL: &str = "gpt-3.5-turbo-instruct";

/// Sampling parameters for one completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for CompletionParams {
    fn default() -> Self {
        Self {
            model: DEFAULT_CHAT_MODEL.to_owned(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParamsError {
    #[error("temperature {0} outside [0, 2]")]
    Temperature(f64),
    #[error("max_tokens must be at least 1")]
    MaxTokens,
    #[error("model name is empty")]
    EmptyModel,
}

impl CompletionParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ParamsError::Temperature(self.temperature));
        }
        if self.max_tokens == 0 {
            return Err(ParamsError::MaxTokens);
        }
        if self.model.trim().is_empty() {
            return Err(ParamsError::EmptyModel);
        }
        Ok(())
    }
}

/// Short stable identifier for a prompt, carried in backend errors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptId(pub String);

impl PromptId {
    pub fn of(prompt: &str) -> Self {
        let digest = Sha256::digest(prompt.as_bytes());
        PromptId(hex::encode(&digest[..8]))
    }
}

impl std::fmt::Display for PromptId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BackendError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("completion for prompt {prompt_id} timed out after {seconds:.1}s")]
    Timeout { prompt_id: PromptId, seconds: f64 },
    #[error("completion for prompt {prompt_id} was rate-limited")]
    RateLimited { prompt_id: PromptId },
    #[error("backend rejected prompt {prompt_id}: {message}")]
    Rejected {
        prompt_id: PromptId,
        status: Option<u16>,
        message: String,
    },
    #[error("transport failure for prompt {prompt_id}: {message}")]
    Transport { prompt_id: PromptId, message: String },
}

impl BackendError {
    pub fn prompt_id(&self) -> Option<&PromptId> {
        match self {
            BackendError::EmptyPrompt => None,
            BackendError::Timeout { prompt_id, .. }
            | BackendError::RateLimited { prompt_id }
            | BackendError::Rejected { prompt_id, .. }
            | BackendError::Transport { prompt_id, .. } => Some(prompt_id),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Remote,
    Scripted,
}

/// Produces a completion for a prompt. Implementations must tolerate
/// concurrent calls.
#[async_trait]
pub trait CompletionBackend: Send + Sync {
    async fn complete(&self, prompt: &str, params: &CompletionParams)
        -> Result<String, BackendError>;

    fn kind(&self) -> BackendKind;
}

#[async_trait]
impl<T: CompletionBackend + ?Sized> CompletionBackend for Arc<T> {
    async fn complete(
        &self,
        prompt: &str,
        params: &CompletionParams,
    ) -> Result<String, BackendError> {
        (**self).complete(prompt, params).await
    }

    fn kind(&self) -> BackendKind {
        (**self).kind()
    }
}

/// The two backend roles: `chat` answers the sufficiency and main prompts,
/// `rewrite` handles code removal. They may point at different models or
/// even different services.
#[derive(Clone)]
pub struct Backends {
    pub chat: Arc<dyn CompletionBackend>,
    pub rewrite: Arc<dyn CompletionBackend>,
    pub rewrite_params: CompletionParams,
}

impl Backends {
    /// Both roles served by the same backend.
    pub fn shared(backend: Arc<dyn CompletionBackend>) -> Self {
        Self {
            chat: backend.clone(),
            rewrite: backend,
            rewrite_params: CompletionParams {
                model: DEFAULT_REWRITE_MODEL.to_owned(),
                ..CompletionParams::default()
            },
        }
    }
}

impl std::fmt::Debug for Backends {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Backends")
            .field("chat", &self.chat.kind())
            .field("rewrite", &self.rewrite.kind())
            .field("rewrite_params", &self.rewrite_params)
            .finish()
    }
}
