//! Durable storage for activity events.
//!
//! Layout under the store root:
//!
//! ```text
//! users/<user_id>.jsonl          append-only event log, one EventRecord per line
//! users/<user_id>.snapshot.json  optional snapshot of the replayed state
//! ```
//!
//! Every append is written and fsynced before it is acknowledged. On load a
//! torn final line (a write cut short by a crash) is discarded with a warning
//! and truncated away; any other unreadable line is fatal.

mod log;
mod record;
mod snapshot;
mod store;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::activity::{EventId, TopicId};

pub use log::{read_log, LogContents, UserLog};
pub use record::{EventRecord, SCHEMA_VERSION};
pub use snapshot::Snapshot;
pub use store::{load_and_replay, valid_user_id, LoadReport, LoadedUser, Store};

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Corrupt { path: PathBuf, line: usize, reason: String },
    #[error("event {got} is not after {last} in topic {topic_id}")]
    OutOfOrder { topic_id: TopicId, last: EventId, got: EventId },
    #[error("invalid user id {0:?}: use ASCII letters, digits, '-' or '_'")]
    InvalidUserId(String),
    #[error("user {0} already exists")]
    UserExists(String),
    #[error("user {0} not found")]
    UnknownUser(String),
    #[error("failed to encode record: {0}")]
    Encode(#[from] serde_json::Error),
}

impl PersistError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        PersistError::Io { path: path.into(), source }
    }
}
