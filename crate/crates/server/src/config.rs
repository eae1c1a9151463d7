//! Service configuration (TOML).

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use helpdesk_core::backend::{
    ApiStyle, Backends, CompletionBackend, CompletionParams, HttpBackend, HttpBackendConfig, HttpConfigError,
    ScriptError, ScriptedBackend, DEFAULT_API_KEY_ENV, DEFAULT_CHAT_MODEL, DEFAULT_MAX_TOKENS,
    DEFAULT_REWRITE_MODEL, DEFAULT_TEMPERATURE,
};
use helpdesk_core::model::DEFAULT_MAX_FIELD_BYTES;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    pub data_dir: PathBuf,
    /// Defaults to `<data_dir>/tokens.json`.
    #[serde(default)]
    pub tokens_file: Option<PathBuf>,
    #[serde(default = "default_max_field_bytes")]
    pub max_field_bytes: usize,
    pub class: ClassSection,
    pub backend: BackendSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSection {
    pub id: String,
    #[serde(default)]
    pub name: String,
    /// Initial avoid set; later changes are stored in the data directory.
    #[serde(default)]
    pub avoid_set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKindConfig {
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    pub kind: BackendKindConfig,
    /// Rule table for the mock backend (JSON).
    #[serde(default)]
    pub mock_rules: Option<PathBuf>,
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Separate endpoint for code-removal rewrites; defaults to `endpoint`.
    #[serde(default)]
    pub rewrite_endpoint: Option<String>,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_chat_model")]
    pub chat_model: String,
    #[serde(default = "default_rewrite_model")]
    pub rewrite_model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: u64,
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}
fn default_max_field_bytes() -> usize {
    DEFAULT_MAX_FIELD_BYTES
}
fn default_key_env() -> String {
    DEFAULT_API_KEY_ENV.into()
}
fn default_chat_model() -> String {
    DEFAULT_CHAT_MODEL.into()
}
fn default_rewrite_model() -> String {
    DEFAULT_REWRITE_MODEL.into()
}
fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}
fn default_max_tokens() -> u32 {
    DEFAULT_MAX_TOKENS
}
fn default_timeout() -> u64 {
    60
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("remote backend needs `endpoint`")]
    MissingEndpoint,
    #[error(transparent)]
    Credential(#[from] HttpConfigError),
    #[error("mock rules: {0}")]
    MockRules(#[from] ScriptError),
    #[error("invalid backend parameters: {0}")]
    Params(String),
}

impl ServerConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Parse TOML; relative paths are resolved against the config file's
    /// directory.
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.data_dir);
        if let Some(p) = cfg.tokens_file.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.backend.mock_rules.as_mut() {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn tokens_path(&self) -> PathBuf {
        self.tokens_file
            .clone()
            .unwrap_or_else(|| self.data_dir.join("tokens.json"))
    }

    pub fn chat_params(&self) -> CompletionParams {
        CompletionParams {
            model: self.backend.chat_model.clone(),
            temperature: self.backend.temperature,
            max_tokens: self.backend.max_tokens,
        }
    }

    /// Build the completion backends. A remote backend whose credential
    /// variable is unset is an error naming the variable.
    pub fn backends(&self) -> Result<Backends, ConfigError> {
        let b = &self.backend;
        let rewrite_params = CompletionParams {
            model: b.rewrite_model.clone(),
            temperature: b.temperature,
            max_tokens: b.max_tokens,
        };
        rewrite_params
            .validate()
            .map_err(|e| ConfigError::Params(e.to_string()))?;
        self.chat_params()
            .validate()
            .map_err(|e| ConfigError::Params(e.to_string()))?;
        match b.kind {
            BackendKindConfig::Mock => {
                let mock = match &b.mock_rules {
                    Some(path) => ScriptedBackend::from_file(path)?,
                    None => ScriptedBackend::new(),
                };
                let mut backends = Backends::shared(Arc::new(mock));
                backends.rewrite_params = rewrite_params;
                Ok(backends)
            }
            BackendKindConfig::Remote => {
                let endpoint = b.endpoint.clone().ok_or(ConfigError::MissingEndpoint)?;
                let make = |endpoint: String, style: ApiStyle| -> Result<Arc<dyn CompletionBackend>, ConfigError> {
                    let mut cfg = HttpBackendConfig::new(endpoint).with_key_from_env(&b.api_key_env)?;
                    cfg.style = style;
                    cfg.timeout = Duration::from_secs(b.timeout_seconds);
                    Ok(Arc::new(HttpBackend::new(cfg)))
                };
                let rewrite_endpoint = b.rewrite_endpoint.clone().unwrap_or_else(|| endpoint.clone());
                Ok(Backends {
                    chat: make(endpoint, ApiStyle::Chat)?,
                    rewrite: make(rewrite_endpoint, ApiStyle::Completions)?,
                    rewrite_params,
                })
            }
        }
    }
}
