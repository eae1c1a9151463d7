use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use helpdesk_core::backend::Backends;
use helpdesk_core::model::{ClassContext, IdSource, RequestLimits, UuidIds};
use helpdesk_core::store::{self, import_performance, LabelStore, LogStore, PerformanceError, PerformanceRecord, StoreError};
use thiserror::Error;

use crate::auth::{TokenError, TokenFile, Tokens};
use crate::config::{ConfigError, ServerConfig};

pub const LOG_FILE: &str = "queries.jsonl";
pub const LABELS_FILE: &str = "labels.jsonl";
pub const CLASS_FILE: &str = "class.json";
pub const PERFORMANCE_FILE: &str = "performance.csv";
pub const EXERCISES_DIR: &str = "exercises";

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Tokens(#[from] TokenError),
    #[error(transparent)]
    Performance(#[from] PerformanceError),
    #[error("cannot create data directory {path}: {source}")]
    DataDir { path: PathBuf, source: std::io::Error },
    #[error("data directory holds class {stored:?} but the config names {configured:?}")]
    ClassMismatch { stored: String, configured: String },
    #[error("invalid class configuration: {0}")]
    Class(String),
}

/// Everything a request handler needs. Cheap to clone.
#[derive(Clone)]
pub struct AppState {
    pub log: Arc<LogStore>,
    pub labels: Arc<LabelStore>,
    pub class: Arc<RwLock<ClassContext>>,
    pub backends: Arc<Backends>,
    pub tokens: Arc<Tokens>,
    pub ids: Arc<dyn IdSource>,
    pub limits: RequestLimits,
    pub data_dir: PathBuf,
    pub performance: Arc<RwLock<Option<Vec<PerformanceRecord>>>>,
}

impl AppState {
    pub fn open(cfg: &ServerConfig) -> Result<Self, StartupError> {
        let backends = cfg.backends()?;
        Self::with_backends(cfg, backends)
    }

    /// Open the data directory, using the given backends instead of the
    /// configured ones.
    pub fn with_backends(cfg: &ServerConfig, backends: Backends) -> Result<Self, StartupError> {
        let dir = &cfg.data_dir;
        std::fs::create_dir_all(dir).map_err(|source| StartupError::DataDir {
            path: dir.clone(),
            source,
        })?;
        let tokens = TokenFile::load(&cfg.tokens_path())?;
        let class = load_or_init_class(cfg, &dir.join(CLASS_FILE))?;
        let perf_path = dir.join(PERFORMANCE_FILE);
        let performance = if perf_path.exists() {
            Some(import_performance(&perf_path)?)
        } else {
            None
        };
        let log = LogStore::open(dir.join(LOG_FILE))?;
        if log.recovered_bytes() > 0 {
            tracing::warn!(bytes = log.recovered_bytes(), "discarded a torn final log line");
        }
        Ok(Self {
            log: Arc::new(log),
            labels: Arc::new(LabelStore::open(dir.join(LABELS_FILE))?),
            class: Arc::new(RwLock::new(class)),
            backends: Arc::new(backends),
            tokens: Arc::new(Tokens::from(&tokens)),
            ids: Arc::new(UuidIds),
            limits: RequestLimits {
                max_field_bytes: cfg.max_field_bytes,
            },
            data_dir: dir.clone(),
            performance: Arc::new(RwLock::new(performance)),
        })
    }

    pub fn class(&self) -> ClassContext {
        self.class.read().expect("class lock poisoned").clone()
    }
}

fn load_or_init_class(cfg: &ServerConfig, path: &Path) -> Result<ClassContext, StartupError> {
    if path.exists() {
        let stored = store::load_class(path)?;
        if stored.class_id != cfg.class.id {
            return Err(StartupError::ClassMismatch {
                stored: stored.class_id,
                configured: cfg.class.id.clone(),
            });
        }
        return Ok(stored);
    }
    let mut ctx = ClassContext::new(cfg.class.id.clone(), cfg.class.name.clone());
    ctx.avoid_set = cfg.class.avoid_set.clone();
    ctx.backend_params = cfg.chat_params();
    ctx.validate().map_err(|e| StartupError::Class(e.to_string()))?;
    store::save_class(path, &ctx)?;
    Ok(ctx)
}
