//! Durable annotation state: an append-only, checksummed JSONL log plus a
//! periodic snapshot. Each log line is `<sha256 hex>\t<json entry>`.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use arc_swap::ArcSwap;
use log::{info, warn};
use mqm_core::corpus::DatasetRecord;
use mqm_core::model::{validate_annotation, ErrorAnnotation, MqmScore, TranslationUnit, UnitAnnotation, Violation};
use mqm_core::score_unit;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const LOG_FILE: &str = "annotations.log";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Unannotated,
    InProgress,
    Done,
}

impl std::str::FromStr for TaskStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "unannotated" => Ok(Self::Unannotated),
            "in_progress" | "inprogress" => Ok(Self::InProgress),
            "done" => Ok(Self::Done),
            _ => Err(format!("unknown status `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub unit_id: String,
    pub status: TaskStatus,
    pub annotation: Option<UnitAnnotation>,
    pub last_modified_ms: Option<u64>,
    pub annotator: Option<String>,
    /// Bumped on every accepted write; clients echo it for optimistic concurrency.
    pub revision: u64,
}

impl AnnotationTask {
    fn fresh(unit_id: &str) -> Self {
        Self {
            unit_id: unit_id.to_string(),
            status: TaskStatus::Unannotated,
            annotation: None,
            last_modified_ms: None,
            annotator: None,
            revision: 0,
        }
    }
}

/// One accepted write as persisted in the log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub unit_id: String,
    pub status: TaskStatus,
    pub errors: Vec<ErrorAnnotation>,
    pub annotator: String,
    pub timestamp_ms: u64,
    pub revision: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Snapshot {
    seq: u64,
    tasks: BTreeMap<String, AnnotationTask>,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("storage corruption: {0}")]
    Corrupt(String),
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("annotation rejected")]
    Invalid(Vec<Violation>),
    #[error("stale revision: expected {expected}, current {current}")]
    StaleRevision { expected: u64, current: u64 },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

fn checksum(payload: &str) -> String {
    let digest = Sha256::digest(payload.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses one complete log line, verifying its checksum.
fn decode_line(line: &str, lineno: usize) -> Result<LogEntry, StoreError> {
    let (sum, payload) = line.split_once('\t').ok_or_else(|| StoreError::Corrupt(format!("log line {lineno}: missing checksum")))?;
    if checksum(payload) != sum {
        return Err(StoreError::Corrupt(format!("log line {lineno}: checksum mismatch")));
    }
    serde_json::from_str(payload).map_err(|e| StoreError::Corrupt(format!("log line {lineno}: {e}")))
}

/// Reads every complete entry. A final line without a newline is a torn
/// write that was never acknowledged; its byte offset is returned so the
/// caller can cut it off.
fn read_log(path: &Path) -> Result<(Vec<LogEntry>, Option<u64>), StoreError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok((Vec::new(), None)),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut reader = BufReader::new(file);
    let mut entries = Vec::new();
    let mut offset = 0u64;
    let mut buf = String::new();
    let mut lineno = 0;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            return Ok((entries, None));
        }
        lineno += 1;
        if !buf.ends_with('\n') {
            warn!("discarding torn final log line {lineno} ({n} bytes)");
            return Ok((entries, Some(offset)));
        }
        entries.push(decode_line(buf.trim_end_matches('\n'), lineno)?);
        offset += n as u64;
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoreConfig {
    pub state_dir: PathBuf,
    /// Write a snapshot after this many log entries; 0 disables snapshots.
    pub snapshot_every: u64,
}

/// Immutable view served to readers.
#[derive(Debug, Clone, Default)]
pub struct State {
    pub tasks: BTreeMap<String, AnnotationTask>,
    pub seq: u64,
}

struct Writer {
    log: File,
    since_snapshot: u64,
}

pub struct Store {
    units: Arc<BTreeMap<String, TranslationUnit>>,
    imported: BTreeMap<String, AnnotationTask>,
    state: ArcSwap<State>,
    writer: Mutex<Writer>,
    cfg: StoreConfig,
    log_path: PathBuf,
}

/// A write request after header/body decoding.
#[derive(Debug, Clone)]
pub struct WriteRequest {
    pub errors: Vec<ErrorAnnotation>,
    pub status: TaskStatus,
    pub annotator: String,
    pub expected_revision: Option<u64>,
}

impl Store {
    /// Loads the dataset, then the snapshot, then replays newer log entries.
    pub fn open(records: Vec<DatasetRecord>, cfg: StoreConfig) -> Result<Self, StoreError> {
        fs::create_dir_all(&cfg.state_dir).map_err(io_err(&cfg.state_dir))?;
        let mut units = BTreeMap::new();
        let mut imported = BTreeMap::new();
        for r in records {
            let id = r.unit.id.clone();
            let mut task = AnnotationTask::fresh(&id);
            // records that arrive with annotations start out as finished work
            if let Some(errors) = &r.errors {
                let ann = UnitAnnotation::new(id.clone(), errors.clone());
                match check(&r.unit, &ann) {
                    Ok(()) => {
                        task.status = TaskStatus::Done;
                        task.annotation = Some(ann);
                        task.annotator = r.annotator.clone();
                    }
                    Err(_) => warn!("imported annotation for `{id}` is invalid; unit starts unannotated"),
                }
            }
            if units.insert(id.clone(), r.unit).is_some() {
                return Err(StoreError::Dataset(format!("duplicate unit id `{id}`")));
            }
            imported.insert(id, task);
        }

        let snap_path = cfg.state_dir.join(SNAPSHOT_FILE);
        let mut state = State { tasks: imported.clone(), seq: 0 };
        match fs::read_to_string(&snap_path) {
            Ok(text) => {
                let (sum, payload) = text.split_once('\t').ok_or_else(|| StoreError::Corrupt("snapshot: missing checksum".into()))?;
                if checksum(payload) != sum.trim() {
                    return Err(StoreError::Corrupt("snapshot: checksum mismatch".into()));
                }
                let snap: Snapshot = serde_json::from_str(payload).map_err(|e| StoreError::Corrupt(format!("snapshot: {e}")))?;
                for (id, t) in snap.tasks {
                    if units.contains_key(&id) {
                        state.tasks.insert(id, t);
                    } else {
                        warn!("snapshot has unknown unit `{id}`; ignored");
                    }
                }
                state.seq = snap.seq;
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(io_err(&snap_path)(e)),
        }

        let log_path = cfg.state_dir.join(LOG_FILE);
        let (entries, torn) = read_log(&log_path)?;
        let mut replayed = 0;
        for e in entries {
            if e.seq <= state.seq {
                continue;
            }
            if !units.contains_key(&e.unit_id) {
                return Err(StoreError::Corrupt(format!("log entry {} names unknown unit `{}`", e.seq, e.unit_id)));
            }
            state.seq = e.seq;
            state.tasks.insert(e.unit_id.clone(), apply(&e));
            replayed += 1;
        }
        let mut log = OpenOptions::new().create(true).read(true).append(true).open(&log_path).map_err(io_err(&log_path))?;
        if let Some(offset) = torn {
            log.set_len(offset).map_err(io_err(&log_path))?;
            log.seek(SeekFrom::End(0)).map_err(io_err(&log_path))?;
            log.sync_all().map_err(io_err(&log_path))?;
        }
        info!("state restored: {} units, seq {}, {} entries replayed", units.len(), state.seq, replayed);

        Ok(Self {
            units: Arc::new(units),
            imported,
            state: ArcSwap::from_pointee(state),
            writer: Mutex::new(Writer { log, since_snapshot: replayed }),
            cfg,
            log_path,
        })
    }

    pub fn units(&self) -> &BTreeMap<String, TranslationUnit> {
        &self.units
    }

    pub fn unit(&self, id: &str) -> Option<&TranslationUnit> {
        self.units.get(id)
    }

    pub fn snapshot(&self) -> Arc<State> {
        self.state.load_full()
    }

    /// Scores an annotation without storing it.
    pub fn preview(&self, unit_id: &str, errors: Vec<ErrorAnnotation>) -> Result<MqmScore, StoreError> {
        let unit = self.unit(unit_id).ok_or_else(|| StoreError::UnknownUnit(unit_id.into()))?;
        let ann = UnitAnnotation::new(unit_id, errors);
        check(unit, &ann)?;
        score_unit(&ann).map_err(|e| StoreError::Invalid(e.violations))
    }

    /// Validates, appends to the log and syncs it, then publishes the new state.
    pub fn write(&self, unit_id: &str, req: WriteRequest) -> Result<(AnnotationTask, MqmScore), StoreError> {
        let unit = self.unit(unit_id).ok_or_else(|| StoreError::UnknownUnit(unit_id.into()))?;
        let ann = UnitAnnotation::new(unit_id, req.errors);
        check(unit, &ann)?;
        let score = score_unit(&ann).map_err(|e| StoreError::Invalid(e.violations))?;

        let mut w = self.writer.lock().expect("writer lock");
        let current = self.state.load();
        let prev = &current.tasks[unit_id];
        if let Some(expected) = req.expected_revision {
            if expected != prev.revision {
                return Err(StoreError::StaleRevision { expected, current: prev.revision });
            }
        }
        let entry = LogEntry {
            seq: current.seq + 1,
            unit_id: unit_id.to_string(),
            status: req.status,
            errors: ann.errors,
            annotator: req.annotator,
            timestamp_ms: now_ms().max(prev.last_modified_ms.map_or(0, |t| t + 1)),
            revision: prev.revision + 1,
        };
        let payload = serde_json::to_string(&entry).expect("log entry serializes");
        let line = format!("{}\t{payload}\n", checksum(&payload));
        w.log.write_all(line.as_bytes()).map_err(io_err(&self.log_path))?;
        w.log.sync_data().map_err(io_err(&self.log_path))?;

        let task = apply(&entry);
        let mut next = State { tasks: current.tasks.clone(), seq: entry.seq };
        next.tasks.insert(unit_id.to_string(), task.clone());
        let next = Arc::new(next);
        self.state.store(next.clone());

        w.since_snapshot += 1;
        if self.cfg.snapshot_every > 0 && w.since_snapshot >= self.cfg.snapshot_every {
            match self.write_snapshot(&next) {
                Ok(()) => w.since_snapshot = 0,
                // the log alone is enough to recover
                Err(e) => warn!("snapshot failed: {e}"),
            }
        }
        Ok((task, score))
    }

    fn write_snapshot(&self, state: &State) -> Result<(), StoreError> {
        let changed: BTreeMap<String, AnnotationTask> =
            state.tasks.iter().filter(|(id, t)| self.imported.get(*id) != Some(*t)).map(|(id, t)| (id.clone(), t.clone())).collect();
        let payload = serde_json::to_string(&Snapshot { seq: state.seq, tasks: changed }).expect("snapshot serializes");
        let path = self.cfg.state_dir.join(SNAPSHOT_FILE);
        let tmp = self.cfg.state_dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(format!("{}\t{payload}", checksum(&payload)).as_bytes()).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
        if let Ok(dir) = File::open(&self.cfg.state_dir) {
            let _ = dir.sync_all();
        }
        Ok(())
    }

    /// Re-reads the whole log and checks every checksum.
    pub fn verify_log(&self) -> Result<usize, StoreError> {
        let _w = self.writer.lock().expect("writer lock");
        let (entries, torn) = read_log(&self.log_path)?;
        if torn.is_some() {
            return Err(StoreError::Corrupt("log ends in a partial line".into()));
        }
        Ok(entries.len())
    }

    /// Every log entry, oldest first.
    pub fn history(&self) -> Result<Vec<LogEntry>, StoreError> {
        let _w = self.writer.lock().expect("writer lock");
        Ok(read_log(&self.log_path)?.0)
    }
}

fn check(unit: &TranslationUnit, ann: &UnitAnnotation) -> Result<(), StoreError> {
    let errors: Vec<Violation> = validate_annotation(unit, ann).into_iter().filter(Violation::is_error).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(StoreError::Invalid(errors))
    }
}

fn apply(e: &LogEntry) -> AnnotationTask {
    AnnotationTask {
        unit_id: e.unit_id.clone(),
        status: e.status,
        annotation: Some(UnitAnnotation::new(e.unit_id.clone(), e.errors.clone())),
        last_modified_ms: Some(e.timestamp_ms),
        annotator: Some(e.annotator.clone()),
        revision: e.revision,
    }
}
