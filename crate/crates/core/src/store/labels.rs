//! Rater labels, stored as an append-only event file. The latest event for
//! a (query, rater) pair wins; earlier events stay in the file as history.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::log::StoreError;
use crate::analytics::labels::{Category, QueryLabel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEvent {
    pub seq: u64,
    pub query_id: String,
    pub rater_id: String,
    pub category: Category,
    #[serde(with = "crate::model::utc_seconds")]
    pub recorded_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UpsertOutcome {
    pub label: QueryLabel,
    pub replaced: Option<Category>,
}

/// Read a labels file: JSON lines with at least `query_id`, `rater_id` and
/// `category`. Later lines for the same (query, rater) replace earlier ones.
pub fn read_labels(path: &Path) -> Result<Vec<QueryLabel>, StoreError> {
    let file = File::open(path).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_labels(BufReader::new(file))
}

pub fn parse_labels<R: BufRead>(reader: R) -> Result<Vec<QueryLabel>, StoreError> {
    let mut latest: BTreeMap<(String, String), (usize, Category)> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let malformed = |message: String| StoreError::Malformed {
            line: idx + 1,
            message,
        };
        let line = line.map_err(|e| malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let label: QueryLabel = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        latest.insert((label.query_id, label.rater_id), (idx, label.category));
    }
    let mut labels: Vec<(usize, QueryLabel)> = latest
        .into_iter()
        .map(|((query_id, rater_id), (idx, category))| {
            (
                idx,
                QueryLabel {
                    query_id,
                    rater_id,
                    category,
                },
            )
        })
        .collect();
    labels.sort_by_key(|(idx, _)| *idx);
    Ok(labels.into_iter().map(|(_, l)| l).collect())
}

struct Inner {
    file: Option<File>,
    events: Vec<LabelEvent>,
}

pub struct LabelStore {
    path: Option<PathBuf>,
    inner: Mutex<Inner>,
}

impl LabelStore {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            inner: Mutex::new(Inner {
                file: None,
                events: Vec::new(),
            }),
        }
    }

    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let io = |source| StoreError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut events = Vec::new();
        if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(io)?;
            let complete = text.rfind('\n').map_or(0, |i| i + 1);
            for (idx, line) in text[..complete].lines().enumerate() {
                let ev = serde_json::from_str::<LabelEvent>(line).map_err(|e| {
                    StoreError::Malformed {
                        line: idx + 1,
                        message: e.to_string(),
                    }
                })?;
                events.push(ev);
            }
            if complete < text.len() {
                // Torn final write.
                let f = OpenOptions::new().write(true).open(&path).map_err(io)?;
                f.set_len(complete as u64).map_err(io)?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io)?;
        Ok(Self {
            path: Some(path),
            inner: Mutex::new(Inner {
                file: Some(file),
                events,
            }),
        })
    }

    pub fn upsert(&self, label: QueryLabel, now: DateTime<Utc>) -> Result<UpsertOutcome, StoreError> {
        let mut inner = self.inner.lock().expect("label store poisoned");
        let replaced = inner
            .events
            .iter()
            .rev()
            .find(|e| e.query_id == label.query_id && e.rater_id == label.rater_id)
            .map(|e| e.category);
        let event = LabelEvent {
            seq: inner.events.last().map_or(1, |e| e.seq + 1),
            query_id: label.query_id.clone(),
            rater_id: label.rater_id.clone(),
            category: label.category,
            recorded_at: now,
        };
        if let Some(file) = inner.file.as_mut() {
            let path = self.path.as_deref().unwrap_or(Path::new("<labels>"));
            let mut line = serde_json::to_string(&event).expect("label events serialize");
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|_| file.sync_data())
                .map_err(|source| StoreError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
        }
        inner.events.push(event);
        Ok(UpsertOutcome { label, replaced })
    }

    /// Full event history, oldest first.
    pub fn history(&self) -> Vec<LabelEvent> {
        self.inner.lock().expect("label store poisoned").events.clone()
    }

    /// Current label per (query, rater), in order of first labeling.
    pub fn current(&self) -> Vec<QueryLabel> {
        let events = self.history();
        let mut order: Vec<(String, String)> = Vec::new();
        let mut latest: BTreeMap<(String, String), Category> = BTreeMap::new();
        for e in events {
            let key = (e.query_id, e.rater_id);
            if latest.insert(key.clone(), e.category).is_none() {
                order.push(key);
            }
        }
        order
            .into_iter()
            .map(|key| {
                let category = latest[&key];
                QueryLabel {
                    query_id: key.0,
                    rater_id: key.1,
                    category,
                }
            })
            .collect()
    }
}
