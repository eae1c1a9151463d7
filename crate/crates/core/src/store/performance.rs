//! Course performance data: `user_id,activity_id,points` CSV.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRecord {
    pub user_id: String,
    pub activity_id: String,
    pub points: f64,
}

#[derive(Debug, Error)]
pub enum PerformanceError {
    #[error("performance file is missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("line {line}: negative points {points} for ({user_id}, {activity_id})")]
    NegativePoints {
        line: u64,
        user_id: String,
        activity_id: String,
        points: f64,
    },
    #[error("line {line}: duplicate entry for ({user_id}, {activity_id})")]
    DuplicateKey {
        line: u64,
        user_id: String,
        activity_id: String,
    },
    #[error("line {line}: points {value:?} is not a finite number")]
    BadNumber { line: u64, value: String },
    #[error("performance file: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub const COLUMNS: [&str; 3] = ["user_id", "activity_id", "points"];

pub fn parse_performance<R: Read>(reader: R) -> Result<Vec<PerformanceRecord>, PerformanceError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 3];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or(PerformanceError::MissingColumn(name))?;
    }
    let mut seen: HashMap<(String, String), ()> = HashMap::new();
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let user_id = row.get(idx[0]).unwrap_or_default().to_owned();
        let activity_id = row.get(idx[1]).unwrap_or_default().to_owned();
        let raw = row.get(idx[2]).unwrap_or_default();
        let points: f64 = raw
            .parse()
            .ok()
            .filter(|p: &f64| p.is_finite())
            .ok_or_else(|| PerformanceError::BadNumber {
                line,
                value: raw.to_owned(),
            })?;
        if points < 0.0 {
            return Err(PerformanceError::NegativePoints {
                line,
                user_id,
                activity_id,
                points,
            });
        }
        if seen.insert((user_id.clone(), activity_id.clone()), ()).is_some() {
            return Err(PerformanceError::DuplicateKey {
                line,
                user_id,
                activity_id,
            });
        }
        out.push(PerformanceRecord {
            user_id,
            activity_id,
            points,
        });
    }
    Ok(out)
}

pub fn import_performance(path: &Path) -> Result<Vec<PerformanceRecord>, PerformanceError> {
    let file = std::fs::File::open(path).map_err(|source| PerformanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_performance(file)
}

pub fn write_performance<W: Write>(out: W, records: &[PerformanceRecord]) -> Result<(), PerformanceError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record([r.user_id.as_str(), r.activity_id.as_str(), &r.points.to_string()])?;
    }
    w.flush().map_err(|source| PerformanceError::Io {
        path: "<performance>".into(),
        source,
    })?;
    Ok(())
}
