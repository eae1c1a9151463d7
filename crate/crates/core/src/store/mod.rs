//! Durable storage: the query log, rater labels, class configuration,
//! exercises and performance data.
//!
//! Log schema (one JSON object per line, keys in this order):
//! `schema_version`, `seq`, `id`, `user_id`, `timestamp` (RFC 3339, UTC,
//! whole seconds), `language`, `code`, `error`, `issue`, `main_text`,
//! `clarification_text`, `code_was_removed`, `fallback_strip_applied`,
//! `template_version`, `failure`, `trace`.

pub mod exercises;
pub mod labels;
pub mod log;
pub mod performance;
pub mod record;

use std::path::Path;

pub use exercises::{import_exercises, write_exercises, ExerciseFailure, ExerciseLoad, ExerciseText};
pub use labels::{parse_labels, read_labels, LabelEvent, LabelStore, UpsertOutcome};
pub use log::{parse_log, read_log, write_log, LogStore, StoreError};
pub use performance::{
    import_performance, parse_performance, write_performance, PerformanceError, PerformanceRecord,
};
pub use record::{QueryLogRecord, SCHEMA_VERSION};

use crate::model::ClassContext;

pub fn load_class(path: &Path) -> Result<ClassContext, StoreError> {
    let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| StoreError::Malformed {
        line: e.line(),
        message: e.to_string(),
    })
}

/// Replace the class file atomically (write to a sibling, then rename).
pub fn save_class(path: &Path, ctx: &ClassContext) -> Result<(), StoreError> {
    let io = |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    };
    let tmp = path.with_extension("json.tmp");
    let text = serde_json::to_string_pretty(ctx).expect("class config serializes");
    std::fs::write(&tmp, text).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}
