use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::record::{EventRecord, SCHEMA_VERSION};
use crate::activity::{EventId, TopicId, UserActivity, UserId};

/// Replayed state of one user as of a point in the log.
///
/// `as_of` holds the last folded event id per topic. Because event ids grow
/// per topic, the log records not covered by a snapshot are exactly those
/// whose id exceeds `as_of` for their topic (or whose topic is absent).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema_version: u32,
    pub user_id: UserId,
    pub as_of: BTreeMap<TopicId, EventId>,
    pub event_count: usize,
    pub state: UserActivity,
}

impl Snapshot {
    pub fn capture(state: &UserActivity) -> Self {
        let as_of =
            state.topics().filter_map(|t| t.last_event().map(|e| (t.topic.topic_id.clone(), e.event_id))).collect();
        Snapshot {
            schema_version: SCHEMA_VERSION,
            user_id: state.user_id().clone(),
            as_of,
            event_count: state.event_count(),
            state: state.clone(),
        }
    }

    pub fn covers(&self, record: &EventRecord) -> bool {
        self.as_of.get(&record.event.topic_id).is_some_and(|last| record.event.event_id <= *last)
    }

    /// Check the snapshot against the log it is meant to summarise. Returns
    /// the reason it cannot be used, if any.
    pub fn mismatch(&self, user_id: &UserId, records: &[EventRecord]) -> Option<String> {
        if self.schema_version != SCHEMA_VERSION {
            return Some(format!("schema_version {}", self.schema_version));
        }
        if &self.user_id != user_id || self.state.user_id() != user_id {
            return Some(format!("snapshot belongs to user {}", self.user_id));
        }
        if self.state.event_count() != self.event_count {
            return Some("event_count disagrees with state".into());
        }
        let mut covered: BTreeMap<&TopicId, Vec<&crate::activity::ActivityEvent>> = BTreeMap::new();
        for r in records.iter().filter(|r| self.covers(r)) {
            covered.entry(&r.event.topic_id).or_default().push(&r.event);
        }
        for topic in self.state.topics() {
            let logged = covered.remove(&topic.topic.topic_id).unwrap_or_default();
            if logged.len() != topic.events().len() || logged.iter().zip(topic.events()).any(|(a, b)| *a != b) {
                return Some(format!("topic {} differs from the log", topic.topic.topic_id));
            }
        }
        if !covered.is_empty() {
            return Some("snapshot claims events for unknown topics".into());
        }
        None
    }
}
