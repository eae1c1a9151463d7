//! Help-request data model and validation.
//!
//! A help request carries the four inputs of the request form (language,
//! code, error, issue) plus the submitting user and the receipt instant.
//! Empty inputs are legal: analytics flags them later, validation does not.

use std::sync::atomic::{AtomicU64, Ordering};

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::CompletionParams;

/// Default per-field cap, in bytes.
pub const DEFAULT_MAX_FIELD_BYTES: usize = 64 * 1024;

/// One student query as submitted through the help form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelpRequest {
    pub id: String,
    pub user_id: String,
    #[serde(with = "utc_seconds")]
    pub timestamp: DateTime<Utc>,
    pub language: String,
    pub code: String,
    pub error: String,
    pub issue: String,
}

/// Unvalidated submission, as it arrives from a client or an import.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRequest {
    pub user_id: String,
    /// RFC 3339 instant. Servers fill this in at receipt.
    pub timestamp: String,
    #[serde(default)]
    pub language: String,
    #[serde(default)]
    pub code: String,
    #[serde(default)]
    pub error: String,
    #[serde(default)]
    pub issue: String,
}

/// Which of the four inputs a validation error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestField {
    Language,
    Code,
    Error,
    Issue,
}

impl std::fmt::Display for RequestField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RequestField::Language => "language",
            RequestField::Code => "code",
            RequestField::Error => "error",
            RequestField::Issue => "issue",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValidationError {
    #[error("malformed timestamp {value:?}: expected an RFC 3339 instant")]
    MalformedTimestamp { value: String },
    #[error("field `{field}` is {len} bytes, limit is {limit}")]
    Oversized {
        field: RequestField,
        len: usize,
        limit: usize,
    },
}

/// Source of fresh request ids.
pub trait IdSource: Send + Sync {
    fn next_id(&self) -> String;
}

/// Random v4 UUIDs; used by the running service.
#[derive(Debug, Default, Clone, Copy)]
pub struct UuidIds;

impl IdSource for UuidIds {
    fn next_id(&self) -> String {
        uuid::Uuid::new_v4().to_string()
    }
}

/// `prefix-000001`, `prefix-000002`, ... Deterministic; used by tests and
/// the synthetic corpus generator.
#[derive(Debug)]
pub struct SequentialIds {
    prefix: String,
    next: AtomicU64,
}

impl SequentialIds {
    pub fn new(prefix: impl Into<String>) -> Self {
        Self {
            prefix: prefix.into(),
            next: AtomicU64::new(1),
        }
    }
}

impl IdSource for SequentialIds {
    fn next_id(&self) -> String {
        let n = self.next.fetch_add(1, Ordering::Relaxed);
        format!("{}-{:06}", self.prefix, n)
    }
}

/// Validates raw submissions against the configured size limit.
#[derive(Debug, Clone, Copy)]
pub struct RequestLimits {
    pub max_field_bytes: usize,
}

impl Default for RequestLimits {
    fn default() -> Self {
        Self {
            max_field_bytes: DEFAULT_MAX_FIELD_BYTES,
        }
    }
}

/// Turn a raw submission into a [`HelpRequest`].
///
/// Never rejects on emptiness. Content fields are kept verbatim except that
/// trailing line breaks (`\n` / `\r\n`) are dropped.
pub fn validate_request(
    raw: RawRequest,
    limits: RequestLimits,
    ids: &dyn IdSource,
) -> Result<HelpRequest, ValidationError> {
    let timestamp = parse_timestamp(&raw.timestamp)?;
    let fields = [
        (RequestField::Language, &raw.language),
        (RequestField::Code, &raw.code),
        (RequestField::Error, &raw.error),
        (RequestField::Issue, &raw.issue),
    ];
    for (field, value) in fields {
        if value.len() > limits.max_field_bytes {
            return Err(ValidationError::Oversized {
                field,
                len: value.len(),
                limit: limits.max_field_bytes,
            });
        }
    }
    Ok(HelpRequest {
        id: ids.next_id(),
        user_id: raw.user_id,
        timestamp,
        language: normalize_trailing_newlines(raw.language),
        code: normalize_trailing_newlines(raw.code),
        error: normalize_trailing_newlines(raw.error),
        issue: normalize_trailing_newlines(raw.issue),
    })
}

/// Parse an RFC 3339 instant and truncate it to whole seconds in UTC.
pub fn parse_timestamp(value: &str) -> Result<DateTime<Utc>, ValidationError> {
    DateTime::parse_from_rfc3339(value.trim())
        .map(|t| t.with_timezone(&Utc).trunc_subsecs(0))
        .map_err(|_| ValidationError::MalformedTimestamp {
            value: value.to_owned(),
        })
}

/// Canonical text form of a timestamp: `2023-02-01T09:30:00Z`.
pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn normalize_trailing_newlines(mut s: String) -> String {
    let keep = s.trim_end_matches(['\n', '\r']).len();
    s.truncate(keep);
    s
}

pub(crate) mod utc_seconds {
    use chrono::{DateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_timestamp(&raw).map_err(serde::de::Error::custom)
    }
}

/// Pipeline stage that produced a trace entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Sufficiency,
    Main,
    CodeRemoval,
}

/// One prompt/completion exchange. `note` records anything unusual, such
/// as a failed completion or a mechanical code strip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub stage: Stage,
    pub prompt: String,
    pub completion: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// What the student gets back. `main_text` never contains a fenced code
/// block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssistanceResponse {
    pub request_id: String,
    pub main_text: String,
    pub clarification_text: Option<String>,
    pub code_was_removed: bool,
    pub fallback_strip_applied: bool,
    pub trace: Vec<TraceEntry>,
    pub template_version: String,
}

/// Instructor configuration for a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassContext {
    pub class_id: String,
    pub name: String,
    #[serde(default)]
    pub avoid_set: Vec<String>,
    #[serde(default)]
    pub backend_params: CompletionParams,
}

#[derive(Debug, Error, PartialEq)]
pub enum ClassConfigError {
    #[error("avoid-set entry {index} is empty")]
    EmptyAvoidTopic { index: usize },
    #[error(transparent)]
    Params(#[from] crate::backend::ParamsError),
}

impl ClassContext {
    pub fn new(class_id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            class_id: class_id.into(),
            name: name.into(),
            avoid_set: Vec::new(),
            backend_params: CompletionParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ClassConfigError> {
        if let Some(index) = self.avoid_set.iter().position(|t| t.trim().is_empty()) {
            return Err(ClassConfigError::EmptyAvoidTopic { index });
        }
        self.backend_params.validate()?;
        Ok(())
    }
}
