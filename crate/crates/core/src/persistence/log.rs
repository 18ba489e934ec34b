use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::record::{EventRecord, SCHEMA_VERSION};
use super::PersistError;
use crate::activity::{ActivityEvent, EventId, TopicId, UserId};

/// Parsed contents of a log file.
#[derive(Debug, Clone, Default)]
pub struct LogContents {
    pub records: Vec<EventRecord>,
    /// Byte length of the intact prefix (everything up to the last good newline).
    pub valid_len: u64,
    /// A partial or unreadable final line was dropped.
    pub torn_tail: bool,
}

/// Read and validate every record in a log file.
///
/// Only the final line may be damaged; it is reported through
/// `LogContents::torn_tail` rather than as an error.
pub fn read_log(path: &Path, user_id: &UserId) -> Result<LogContents, PersistError> {
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| PersistError::io(path, e))?;

    let mut contents = LogContents::default();
    let mut offset = 0usize;
    let mut line_no = 0usize;
    let mut last_ids: HashMap<TopicId, EventId> = HashMap::new();

    while offset < bytes.len() {
        line_no += 1;
        let (line, next, terminated) = match bytes[offset..].iter().position(|&b| b == b'\n') {
            Some(i) => (&bytes[offset..offset + i], offset + i + 1, true),
            None => (&bytes[offset..], bytes.len(), false),
        };
        let is_last = next >= bytes.len();

        let parsed = std::str::from_utf8(line)
            .map_err(|e| format!("invalid UTF-8: {e}"))
            .and_then(|text| serde_json::from_str::<EventRecord>(text).map_err(|e| format!("unreadable record: {e}")));

        let record = match parsed {
            Ok(record) if terminated => record,
            Ok(_) | Err(_) if is_last => {
                contents.torn_tail = true;
                break;
            }
            Ok(_) => unreachable!("an unterminated line is always the last"),
            Err(reason) => {
                return Err(PersistError::Corrupt { path: path.to_path_buf(), line: line_no, reason });
            }
        };

        let corrupt = |reason: String| PersistError::Corrupt { path: path.to_path_buf(), line: line_no, reason };
        if record.schema_version != SCHEMA_VERSION {
            return Err(corrupt(format!("unsupported schema_version {}", record.schema_version)));
        }
        if &record.user_id != user_id {
            return Err(corrupt(format!("record belongs to user {}", record.user_id)));
        }
        if let Some(last) = last_ids.get(&record.event.topic_id) {
            if record.event.event_id <= *last {
                return Err(corrupt(format!(
                    "event {} is not after {last} in topic {}",
                    record.event.event_id, record.event.topic_id
                )));
            }
        }
        last_ids.insert(record.event.topic_id.clone(), record.event.event_id);

        contents.records.push(record);
        contents.valid_len = next as u64;
        offset = next;
    }
    Ok(contents)
}

/// Append handle for one user's log file.
#[derive(Debug)]
pub struct UserLog {
    path: PathBuf,
    user_id: UserId,
    file: File,
    len: u64,
    last_ids: HashMap<TopicId, EventId>,
    records: usize,
}

impl UserLog {
    /// Create a new, empty log. Fails if the file already exists.
    pub(crate) fn create(path: PathBuf, user_id: UserId) -> Result<Self, PersistError> {
        let file = OpenOptions::new().append(true).create_new(true).open(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::AlreadyExists => PersistError::UserExists(user_id.to_string()),
            _ => PersistError::io(&path, e),
        })?;
        file.sync_all().map_err(|e| PersistError::io(&path, e))?;
        if let Some(dir) = path.parent() {
            sync_dir(dir);
        }
        Ok(UserLog { path, user_id, file, len: 0, last_ids: HashMap::new(), records: 0 })
    }

    /// Open an existing log for appending, discarding any torn tail.
    pub(crate) fn open(path: PathBuf, user_id: UserId) -> Result<(Self, LogContents), PersistError> {
        let contents = read_log(&path, &user_id)?;
        let file = OpenOptions::new().append(true).open(&path).map_err(|e| PersistError::io(&path, e))?;
        if contents.torn_tail {
            tracing::warn!(path = %path.display(), "discarding torn final record");
            file.set_len(contents.valid_len).map_err(|e| PersistError::io(&path, e))?;
            file.sync_all().map_err(|e| PersistError::io(&path, e))?;
        }
        let mut last_ids = HashMap::new();
        for r in &contents.records {
            last_ids.insert(r.event.topic_id.clone(), r.event.event_id);
        }
        let log = UserLog { path, user_id, file, len: contents.valid_len, last_ids, records: contents.records.len() };
        Ok((log, contents))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn user_id(&self) -> &UserId {
        &self.user_id
    }

    pub fn record_count(&self) -> usize {
        self.records
    }

    /// Write one event and fsync it. On error the file is rolled back to its
    /// previous length and nothing is recorded.
    pub fn append(&mut self, event: &ActivityEvent) -> Result<(), PersistError> {
        if let Some(last) = self.last_ids.get(&event.topic_id) {
            if event.event_id <= *last {
                return Err(PersistError::OutOfOrder {
                    topic_id: event.topic_id.clone(),
                    last: *last,
                    got: event.event_id,
                });
            }
        }
        let line = EventRecord::new(self.user_id.clone(), event.clone()).to_line()?;

        let written = self.file.write_all(line.as_bytes()).and_then(|()| self.file.sync_data());
        if let Err(e) = written {
            let _ = self.file.set_len(self.len);
            return Err(PersistError::io(&self.path, e));
        }

        self.len += line.len() as u64;
        self.records += 1;
        self.last_ids.insert(event.topic_id.clone(), event.event_id);
        Ok(())
    }
}

#[cfg(unix)]
pub(crate) fn sync_dir(dir: &Path) {
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
}

#[cfg(not(unix))]
pub(crate) fn sync_dir(_dir: &Path) {}
