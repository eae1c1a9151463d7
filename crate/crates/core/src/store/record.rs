use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::model::{AssistanceResponse, HelpRequest, TraceEntry};

pub const SCHEMA_VERSION: u32 = 1;

/// One line of the query log: the request and its response, flattened.
///
/// Keys serialize in declaration order, which is the documented log schema.
/// Response fields are null when no response was produced: either the
/// backend failed (`failure` set) or the record was imported without one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLogRecord {
    pub schema_version: u32,
    /// Store-assigned, strictly increasing in append order.
    pub seq: u64,
    pub id: String,
    pub user_id: String,
    #[serde(with = "crate::model::utc_seconds")]
    pub timestamp: DateTime<Utc>,
    pub language: String,
    pub code: String,
    pub error: String,
    pub issue: String,
    pub main_text: Option<String>,
    pub clarification_text: Option<String>,
    pub code_was_removed: bool,
    pub fallback_strip_applied: bool,
    pub template_version: Option<String>,
    pub failure: Option<String>,
    pub trace: Vec<TraceEntry>,
}

impl QueryLogRecord {
    pub fn answered(req: &HelpRequest, resp: &AssistanceResponse) -> Self {
        Self {
            main_text: Some(resp.main_text.clone()),
            clarification_text: resp.clarification_text.clone(),
            code_was_removed: resp.code_was_removed,
            fallback_strip_applied: resp.fallback_strip_applied,
            template_version: Some(resp.template_version.clone()),
            trace: resp.trace.clone(),
            ..Self::request_only(req)
        }
    }

    pub fn failed(req: &HelpRequest, failure: impl Into<String>) -> Self {
        Self {
            failure: Some(failure.into()),
            ..Self::request_only(req)
        }
    }

    pub fn request_only(req: &HelpRequest) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seq: 0,
            id: req.id.clone(),
            user_id: req.user_id.clone(),
            timestamp: req.timestamp,
            language: req.language.clone(),
            code: req.code.clone(),
            error: req.error.clone(),
            issue: req.issue.clone(),
            main_text: None,
            clarification_text: None,
            code_was_removed: false,
            fallback_strip_applied: false,
            template_version: None,
            failure: None,
            trace: Vec::new(),
        }
    }

    pub fn request(&self) -> HelpRequest {
        HelpRequest {
            id: self.id.clone(),
            user_id: self.user_id.clone(),
            timestamp: self.timestamp,
            language: self.language.clone(),
            code: self.code.clone(),
            error: self.error.clone(),
            issue: self.issue.clone(),
        }
    }

    /// Canonical single-line JSON form, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log records always serialize")
    }
}
