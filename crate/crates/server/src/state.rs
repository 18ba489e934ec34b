use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use timelines_core::activity::{ActivityEvent, Command, TopicId, UserActivity, UserId};
use timelines_core::persistence::{PersistError, Store, UserLog};
use timelines_core::search::IndexedCatalog;
use timelines_core::{Catalog, Timestamp};

use crate::clock;
use crate::error::{ApiError, ErrorCode};

/// One user's replayed state and the handle used to append to their log.
#[derive(Debug)]
pub struct UserSlot {
    pub activity: UserActivity,
    log: UserLog,
}

impl UserSlot {
    fn last_time(&self, command: &Command) -> Option<Timestamp> {
        let topic_id = match command {
            Command::IssueQuery { .. } => self.activity.ongoing_topic_id()?,
            Command::StartTopic { .. } => return None,
            Command::ReissueQuery { topic_id, .. }
            | Command::SaveResult { topic_id, .. }
            | Command::RemoveResult { topic_id, .. }
            | Command::RenameTopic { topic_id, .. }
            | Command::ResumeTopic { topic_id } => topic_id,
        };
        self.activity.topic(topic_id)?.last_event().map(|e| e.at)
    }

    /// Decide, durably append, then apply.
    fn execute(
        &mut self,
        command: &Command,
        client: Option<Timestamp>,
        catalog: &Catalog,
    ) -> Result<ActivityEvent, ApiError> {
        let at = clock::resolve(client, self.last_time(command), Timestamp::now());
        let event = self.activity.decide(command, at, catalog)?;
        self.log.append(&event)?;
        self.activity.apply(event.clone()).map_err(|e| {
            tracing::error!(error = %e, "event appended but could not be applied");
            ApiError::new(ErrorCode::IoError, e.to_string())
        })?;
        Ok(event)
    }

    pub fn log_path(&self) -> &std::path::Path {
        self.log.path()
    }
}

struct Inner {
    catalog: Catalog,
    index: IndexedCatalog,
    store: Store,
    idle_gap: Duration,
    users: RwLock<HashMap<UserId, Arc<Mutex<UserSlot>>>>,
    owners: RwLock<HashMap<TopicId, UserId>>,
}

/// Shared service state. Mutations of one user are serialized by that user's
/// lock; different users proceed independently.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    /// Load every user in the store and index topic ownership.
    pub fn open(
        catalog: Catalog,
        index: IndexedCatalog,
        store: Store,
        idle_gap: Duration,
    ) -> Result<Self, PersistError> {
        let mut users = HashMap::new();
        let mut owners = HashMap::new();
        for loaded in store.load_all()? {
            let user_id = loaded.activity.user_id().clone();
            if loaded.report.torn_tail_discarded {
                tracing::warn!(user = %user_id, "discarded a torn final log record");
            }
            for topic in loaded.activity.topics() {
                owners.insert(topic.topic.topic_id.clone(), user_id.clone());
            }
            let slot = UserSlot { activity: loaded.activity, log: loaded.log };
            users.insert(user_id, Arc::new(Mutex::new(slot)));
        }
        tracing::info!(users = users.len(), topics = owners.len(), "state loaded");
        Ok(AppState {
            inner: Arc::new(Inner {
                catalog,
                index,
                store,
                idle_gap,
                users: RwLock::new(users),
                owners: RwLock::new(owners),
            }),
        })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.inner.catalog
    }

    pub fn index(&self) -> &IndexedCatalog {
        &self.inner.index
    }

    pub fn idle_gap(&self) -> Duration {
        self.inner.idle_gap
    }

    pub fn create_user(&self) -> Result<UserId, ApiError> {
        let user_id = UserId::new(uuid::Uuid::new_v4().simple().to_string());
        let log = self.inner.store.create_user(&user_id)?;
        let slot = UserSlot { activity: UserActivity::new(user_id.clone()), log };
        self.inner.users.write().expect("users lock").insert(user_id.clone(), Arc::new(Mutex::new(slot)));
        Ok(user_id)
    }

    fn slot(&self, user_id: &UserId) -> Result<Arc<Mutex<UserSlot>>, ApiError> {
        self.inner
            .users
            .read()
            .expect("users lock")
            .get(user_id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("user {user_id} not found")))
    }

    pub fn owner_of(&self, topic_id: &TopicId) -> Result<UserId, ApiError> {
        self.inner
            .owners
            .read()
            .expect("owners lock")
            .get(topic_id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("topic {topic_id} not found")))
    }

    /// Run `f` with exclusive access to a user's state.
    pub fn with_user<R>(
        &self,
        user_id: &UserId,
        f: impl FnOnce(&mut UserSlot) -> Result<R, ApiError>,
    ) -> Result<R, ApiError> {
        let slot = self.slot(user_id)?;
        let mut guard = slot.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
        f(&mut guard)
    }

    /// Execute a command for a user, persisting its event before applying it.
    pub fn execute(
        &self,
        slot: &mut UserSlot,
        command: &Command,
        client: Option<Timestamp>,
    ) -> Result<ActivityEvent, ApiError> {
        let event = slot.execute(command, client, &self.inner.catalog)?;
        if matches!(command, Command::IssueQuery { .. } | Command::StartTopic { .. }) {
            self.inner
                .owners
                .write()
                .expect("owners lock")
                .entry(event.topic_id.clone())
                .or_insert_with(|| slot.activity.user_id().clone());
        }
        Ok(event)
    }

    /// Snapshot every user. Returns how many snapshots were written.
    pub fn write_snapshots(&self) -> Result<usize, PersistError> {
        let slots: Vec<_> = self.inner.users.read().expect("users lock").values().cloned().collect();
        for slot in &slots {
            let guard = slot.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
            self.inner.store.write_snapshot(&guard.activity)?;
        }
        Ok(slots.len())
    }
}
