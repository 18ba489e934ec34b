use serde::{Deserialize, Serialize};

use super::ids::{EventId, TopicId};
use crate::time::Timestamp;

/// Where a `QueryIssued` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum QuerySource {
    Fresh,
    /// Re-issued by clicking a previous query; points at the clicked event.
    ReissueOf {
        event_id: EventId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    QueryIssued { query_text: String, source: QuerySource },
    ResultSaved { query_event_id: EventId, resource_id: String },
    ResultRemoved { save_event_id: EventId },
    TopicRenamed { new_title: String },
    TopicResumed,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::QueryIssued { .. } => "query_issued",
            EventKind::ResultSaved { .. } => "result_saved",
            EventKind::ResultRemoved { .. } => "result_removed",
            EventKind::TopicRenamed { .. } => "topic_renamed",
            EventKind::TopicResumed => "topic_resumed",
        }
    }
}

/// Immutable record of one user action within a topic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityEvent {
    pub event_id: EventId,
    pub topic_id: TopicId,
    pub at: Timestamp,
    #[serde(flatten)]
    pub kind: EventKind,
}
