//! Core of the help service: the help-request model, completion backends,
//! the no-code guardrail pipeline, log persistence, and the query-log
//! analytics (deduplication, sessions, usage composite, low-effort flags,
//! category reporting, rater agreement, usage/performance correlation).

pub mod analytics;
pub mod backend;
pub mod model;
pub mod pipeline;
pub mod store;
pub mod synth;

pub use backend::{BackendError, Backends, CompletionBackend, CompletionParams, ScriptedBackend};
pub use model::{AssistanceResponse, ClassContext, HelpRequest, RawRequest, Stage, TraceEntry};
pub use analytics::{AnalyticsError, Category, QueryLabel};
pub use pipeline::{respond, PipelineError};
pub use store::{ExerciseText, LogStore, PerformanceRecord, QueryLogRecord, StoreError};
