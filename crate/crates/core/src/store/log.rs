//! Append-only JSON-lines query log.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use thiserror::Error;

use super::record::QueryLogRecord;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage I/O failure on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate query id {0}")]
    DuplicateId(String),
    #[error("line {line}: sequence number {seq} does not follow {previous}")]
    OutOfOrder { line: usize, seq: u64, previous: u64 },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parse JSON-lines log text. Empty lines are not allowed; the first bad
/// line aborts with its 1-based number.
pub fn parse_log<R: BufRead>(reader: R) -> Result<Vec<QueryLogRecord>, StoreError> {
    let mut records: Vec<QueryLogRecord> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| StoreError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let record: QueryLogRecord =
            serde_json::from_str(&line).map_err(|e| StoreError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        if let Some(prev) = records.last() {
            if record.seq <= prev.seq {
                return Err(StoreError::OutOfOrder {
                    line: line_no,
                    seq: record.seq,
                    previous: prev.seq,
                });
            }
        }
        records.push(record);
    }
    Ok(records)
}

/// Read a log file for offline analysis.
pub fn read_log(path: &Path) -> Result<Vec<QueryLogRecord>, StoreError> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_log(BufReader::new(file))
}

/// Write records as canonical JSON lines.
pub fn write_log<W: Write>(mut out: W, records: &[QueryLogRecord]) -> io::Result<usize> {
    for r in records {
        out.write_all(r.to_line().as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(records.len())
}

struct Writer {
    file: Option<File>,
    next_seq: u64,
    ids: HashSet<String>,
}

/// Durable append-only log. Appends are serialized; readers see a
/// consistent prefix of the log at all times.
pub struct LogStore {
    path: Option<PathBuf>,
    writer: Mutex<Writer>,
    records: RwLock<Vec<QueryLogRecord>>,
    recovered_bytes: u64,
}

impl std::fmt::Debug for LogStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LogStore")
            .field("path", &self.path)
            .field("len", &self.len())
            .finish()
    }
}

impl LogStore {
    /// A store that lives only in memory.
    pub fn in_memory() -> Self {
        Self {
            path: None,
            writer: Mutex::new(Writer {
                file: None,
                next_seq: 1,
                ids: HashSet::new(),
            }),
            records: RwLock::new(Vec::new()),
            recovered_bytes: 0,
        }
    }

    /// Open (or create) the log at `path`. A torn final line left by a
    /// crash mid-append is cut off; every complete line must parse.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(io_err(&path))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io_err(&path))?;

        let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        let recovered_bytes = (bytes.len() - complete) as u64;
        if recovered_bytes > 0 {
            file.set_len(complete as u64).map_err(io_err(&path))?;
            file.sync_all().map_err(io_err(&path))?;
        }
        file.seek(SeekFrom::End(0)).map_err(io_err(&path))?;

        let records = parse_log(&bytes[..complete])?;
        let mut ids = HashSet::with_capacity(records.len());
        for r in &records {
            if !ids.insert(r.id.clone()) {
                return Err(StoreError::DuplicateId(r.id.clone()));
            }
        }
        let next_seq = records.last().map_or(1, |r| r.seq + 1);
        Ok(Self {
            path: Some(path),
            writer: Mutex::new(Writer {
                file: Some(file),
                next_seq,
                ids,
            }),
            records: RwLock::new(records),
            recovered_bytes,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Bytes of a torn final line discarded when the store was opened.
    pub fn recovered_bytes(&self) -> u64 {
        self.recovered_bytes
    }

    fn write_line(&self, w: &mut Writer, record: &QueryLogRecord) -> Result<(), StoreError> {
        if let Some(file) = w.file.as_mut() {
            let path = self.path.as_deref().unwrap_or(Path::new("<log>"));
            let mut line = record.to_line();
            line.push('\n');
            file.write_all(line.as_bytes()).map_err(io_err(path))?;
            file.sync_data().map_err(io_err(path))?;
        }
        Ok(())
    }

    /// Append a record, assigning the next sequence number. Durable on
    /// return.
    pub fn append(&self, mut record: QueryLogRecord) -> Result<u64, StoreError> {
        let mut w = self.writer.lock().expect("log writer poisoned");
        if w.ids.contains(&record.id) {
            return Err(StoreError::DuplicateId(record.id));
        }
        record.seq = w.next_seq;
        self.write_line(&mut w, &record)?;
        w.next_seq += 1;
        w.ids.insert(record.id.clone());
        let seq = record.seq;
        self.records.write().expect("log poisoned").push(record);
        Ok(seq)
    }

    pub fn load_all(&self) -> Vec<QueryLogRecord> {
        self.records.read().expect("log poisoned").clone()
    }

    pub fn get(&self, id: &str) -> Option<QueryLogRecord> {
        self.records
            .read()
            .expect("log poisoned")
            .iter()
            .find(|r| r.id == id)
            .cloned()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.writer.lock().expect("log writer poisoned").ids.contains(id)
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("log poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records matching `filter`, in log order.
    pub fn select(&self, filter: impl Fn(&QueryLogRecord) -> bool) -> Vec<QueryLogRecord> {
        self.records
            .read()
            .expect("log poisoned")
            .iter()
            .filter(|r| filter(r))
            .cloned()
            .collect()
    }

    pub fn export_log<W: Write>(&self, out: W) -> io::Result<usize> {
        let records = self.records.read().expect("log poisoned");
        write_log(out, &records)
    }

    pub fn export_to(&self, path: &Path) -> Result<usize, StoreError> {
        let file = File::create(path).map_err(io_err(path))?;
        self.export_log(io::BufWriter::new(file)).map_err(io_err(path))
    }

    /// Import exported lines, keeping their sequence numbers and ids. The
    /// whole input is validated before anything is appended.
    pub fn import_log<R: BufRead>(&self, src: R) -> Result<usize, StoreError> {
        let incoming = parse_log(src)?;
        let mut w = self.writer.lock().expect("log writer poisoned");
        let mut seen = HashSet::new();
        for (idx, r) in incoming.iter().enumerate() {
            if w.ids.contains(&r.id) || !seen.insert(r.id.as_str()) {
                return Err(StoreError::DuplicateId(r.id.clone()));
            }
            if idx == 0 && r.seq < w.next_seq {
                return Err(StoreError::OutOfOrder {
                    line: 1,
                    seq: r.seq,
                    previous: w.next_seq - 1,
                });
            }
        }
        for r in &incoming {
            self.write_line(&mut w, r)?;
            w.next_seq = r.seq + 1;
            w.ids.insert(r.id.clone());
            self.records.write().expect("log poisoned").push(r.clone());
        }
        Ok(incoming.len())
    }

    pub fn import_from(&self, path: &Path) -> Result<usize, StoreError> {
        let file = File::open(path).map_err(io_err(path))?;
        self.import_log(BufReader::new(file))
    }
}
