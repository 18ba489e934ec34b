use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::log::{sync_dir, UserLog};
use super::snapshot::Snapshot;
use super::PersistError;
use crate::activity::{ActivityState, UserActivity, UserId};

const USERS_DIR: &str = "users";
const LOG_EXT: &str = "jsonl";
const SNAPSHOT_SUFFIX: &str = ".snapshot.json";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub records: usize,
    pub torn_tail_discarded: bool,
    pub snapshot_used: bool,
    /// Events folded on top of the snapshot (equals `records` on full replay).
    pub replayed: usize,
}

#[derive(Debug)]
pub struct LoadedUser {
    pub activity: UserActivity,
    pub log: UserLog,
    pub report: LoadReport,
}

/// A directory of per-user event logs and snapshots.
#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

pub fn valid_user_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, PersistError> {
        let root = root.into();
        let users = root.join(USERS_DIR);
        fs::create_dir_all(&users).map_err(|e| PersistError::io(&users, e))?;
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn checked(&self, user_id: &UserId) -> Result<(), PersistError> {
        if valid_user_id(user_id.as_str()) {
            Ok(())
        } else {
            Err(PersistError::InvalidUserId(user_id.to_string()))
        }
    }

    pub fn log_path(&self, user_id: &UserId) -> PathBuf {
        self.root.join(USERS_DIR).join(format!("{user_id}.{LOG_EXT}"))
    }

    pub fn snapshot_path(&self, user_id: &UserId) -> PathBuf {
        self.root.join(USERS_DIR).join(format!("{user_id}{SNAPSHOT_SUFFIX}"))
    }

    pub fn has_user(&self, user_id: &UserId) -> bool {
        valid_user_id(user_id.as_str()) && self.log_path(user_id).is_file()
    }

    /// Every user with a log file, sorted by id.
    pub fn user_ids(&self) -> Result<Vec<UserId>, PersistError> {
        let dir = self.root.join(USERS_DIR);
        let mut ids = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| PersistError::io(&dir, e))? {
            let entry = entry.map_err(|e| PersistError::io(&dir, e))?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some(LOG_EXT) {
                continue;
            }
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                if valid_user_id(stem) {
                    ids.push(UserId::new(stem));
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn create_user(&self, user_id: &UserId) -> Result<UserLog, PersistError> {
        self.checked(user_id)?;
        UserLog::create(self.log_path(user_id), user_id.clone())
    }

    /// Open a user's log and rebuild their state, using the snapshot when it
    /// is consistent with the log and falling back to a full replay otherwise.
    pub fn load_user(&self, user_id: &UserId) -> Result<LoadedUser, PersistError> {
        self.checked(user_id)?;
        let path = self.log_path(user_id);
        if !path.is_file() {
            return Err(PersistError::UnknownUser(user_id.to_string()));
        }
        let (log, contents) = UserLog::open(path.clone(), user_id.clone())?;
        let records = contents.records;
        let mut report =
            LoadReport { records: records.len(), torn_tail_discarded: contents.torn_tail, ..LoadReport::default() };

        if let Some(snapshot) = self.read_snapshot(user_id) {
            match snapshot.mismatch(user_id, &records) {
                None => {
                    let mut activity = snapshot.state.clone();
                    let tail: Vec<_> = records.iter().filter(|r| !snapshot.covers(r)).collect();
                    let folded = tail.iter().try_for_each(|r| activity.apply(r.event.clone()));
                    if folded.is_ok() {
                        report.snapshot_used = true;
                        report.replayed = tail.len();
                        return Ok(LoadedUser { activity, log, report });
                    }
                    tracing::warn!(user = %user_id, "snapshot tail does not fold cleanly; replaying full log");
                }
                Some(reason) => {
                    tracing::warn!(user = %user_id, %reason, "ignoring snapshot; replaying full log");
                }
            }
        }

        let mut activity = UserActivity::new(user_id.clone());
        for (i, r) in records.iter().enumerate() {
            activity.apply(r.event.clone()).map_err(|e| PersistError::Corrupt {
                path: path.clone(),
                line: i + 1,
                reason: e.to_string(),
            })?;
        }
        report.replayed = records.len();
        Ok(LoadedUser { activity, log, report })
    }

    pub fn load_all(&self) -> Result<Vec<LoadedUser>, PersistError> {
        self.user_ids()?.iter().map(|id| self.load_user(id)).collect()
    }

    fn read_snapshot(&self, user_id: &UserId) -> Option<Snapshot> {
        let path = self.snapshot_path(user_id);
        let bytes = fs::read(&path).ok()?;
        match serde_json::from_slice(&bytes) {
            Ok(s) => Some(s),
            Err(e) => {
                tracing::warn!(path = %path.display(), error = %e, "unreadable snapshot");
                None
            }
        }
    }

    /// Atomically replace the user's snapshot with the given state.
    pub fn write_snapshot(&self, state: &UserActivity) -> Result<Snapshot, PersistError> {
        self.checked(state.user_id())?;
        let snapshot = Snapshot::capture(state);
        let path = self.snapshot_path(state.user_id());
        let tmp = path.with_extension("tmp");
        let body = serde_json::to_vec(&snapshot)?;
        let written = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(&body)?;
            f.sync_all()
        });
        written.map_err(|e| PersistError::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| PersistError::io(&path, e))?;
        if let Some(dir) = path.parent() {
            sync_dir(dir);
        }
        Ok(snapshot)
    }
}

/// Load every user in the store.
pub fn load_and_replay(root: impl Into<PathBuf>) -> Result<ActivityState, PersistError> {
    let store = Store::open(root)?;
    let users = store.load_all()?.into_iter().map(|u| (u.activity.user_id().clone(), u.activity)).collect();
    Ok(ActivityState { users })
}
