//! Overview and Detailed timelines derived from a topic's event history.
//!
//! A timeline is a tree of sessions → query groups → saved entries. Sessions
//! and query groups are ordered newest first; saves inside a query group are
//! oldest first. Each saved entry sits under the query whose results page it
//! was saved from, and removed entries stay in place with `removed = true`.
//!
//! The only difference between the two detail levels is the `card` payload:
//! detailed entries carry the full catalog record, overview entries carry
//! just the title, resource type and save time.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::activity::{EventId, EventKind, QuerySource, TopicId, TopicState};
use crate::catalog::{Catalog, Resource, ResourceType};
use crate::session::segment_sessions;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimelineDetail {
    Overview,
    Detailed,
}

impl fmt::Display for TimelineDetail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimelineDetail::Overview => "overview",
            TimelineDetail::Detailed => "detailed",
        })
    }
}

impl FromStr for TimelineDetail {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "overview" => Ok(TimelineDetail::Overview),
            "detailed" => Ok(TimelineDetail::Detailed),
            other => Err(format!("unknown timeline detail {other:?}; expected overview or detailed")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineView {
    pub topic_id: TopicId,
    pub title: String,
    pub detail: TimelineDetail,
    pub sessions: Vec<SessionGroup>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionGroup {
    pub session_id: usize,
    pub start_at: Timestamp,
    pub end_at: Timestamp,
    pub query_groups: Vec<QueryGroup>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryGroup {
    pub query_event_id: EventId,
    pub query_text: String,
    pub issued_at: Timestamp,
    pub reissue_of: Option<EventId>,
    pub saves: Vec<SaveEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaveEntry {
    pub save_event_id: EventId,
    pub query_event_id: EventId,
    pub resource_id: String,
    pub resource_type: ResourceType,
    pub title: String,
    pub saved_at: Timestamp,
    pub removed: bool,
    pub removed_at: Option<Timestamp>,
    pub card: Option<Resource>,
}

impl TimelineView {
    pub fn query_groups(&self) -> impl Iterator<Item = &QueryGroup> {
        self.sessions.iter().flat_map(|s| s.query_groups.iter())
    }

    pub fn save_entries(&self) -> impl Iterator<Item = &SaveEntry> {
        self.query_groups().flat_map(|q| q.saves.iter())
    }

    /// Same tree with every card dropped and the detail level normalised,
    /// for comparing the structure of two detail levels.
    pub fn structure(&self) -> TimelineView {
        let mut view = self.clone();
        view.detail = TimelineDetail::Overview;
        for session in &mut view.sessions {
            for group in &mut session.query_groups {
                for entry in &mut group.saves {
                    entry.card = None;
                }
            }
        }
        view
    }
}

/// Build a timeline from a topic's events. Pure: the same events, catalog
/// and gap always produce the same view.
///
/// Sessions that contain no query (e.g. only a rename or a resume) are not
/// rendered.
pub fn build_timeline(
    topic: &TopicState,
    detail: TimelineDetail,
    catalog: &Catalog,
    idle_gap: Duration,
) -> TimelineView {
    let events = topic.events();

    let mut removed_at: HashMap<EventId, Timestamp> = HashMap::new();
    for e in events {
        if let EventKind::ResultRemoved { save_event_id } = e.kind {
            removed_at.insert(save_event_id, e.at);
        }
    }

    // Query groups in event order, plus an index for attaching saves.
    let mut groups: Vec<QueryGroup> = Vec::new();
    let mut group_of: HashMap<EventId, usize> = HashMap::new();
    for e in events {
        match &e.kind {
            EventKind::QueryIssued { query_text, source } => {
                group_of.insert(e.event_id, groups.len());
                groups.push(QueryGroup {
                    query_event_id: e.event_id,
                    query_text: query_text.clone(),
                    issued_at: e.at,
                    reissue_of: match source {
                        QuerySource::Fresh => None,
                        QuerySource::ReissueOf { event_id } => Some(*event_id),
                    },
                    saves: Vec::new(),
                });
            }
            EventKind::ResultSaved { query_event_id, resource_id } => {
                let Some(&gi) = group_of.get(query_event_id) else { continue };
                let resource = catalog.get(resource_id);
                let removed = removed_at.get(&e.event_id).copied();
                groups[gi].saves.push(SaveEntry {
                    save_event_id: e.event_id,
                    query_event_id: *query_event_id,
                    resource_id: resource_id.clone(),
                    resource_type: resource.map_or(ResourceType::Other, |r| r.resource_type),
                    title: resource.map_or_else(|| resource_id.clone(), |r| r.title.clone()),
                    saved_at: e.at,
                    removed: removed.is_some(),
                    removed_at: removed,
                    card: match detail {
                        TimelineDetail::Detailed => resource.cloned(),
                        TimelineDetail::Overview => None,
                    },
                });
            }
            _ => {}
        }
    }

    let segments = segment_sessions(events, idle_gap);
    let mut session_of: HashMap<EventId, usize> = HashMap::new();
    for (i, session) in segments.iter().enumerate() {
        session_of.extend(session.event_ids.iter().map(|&id| (id, i)));
    }
    let mut buckets: Vec<Vec<QueryGroup>> = vec![Vec::new(); segments.len()];
    for group in groups {
        buckets[session_of[&group.query_event_id]].push(group);
    }

    let mut sessions: Vec<SessionGroup> = segments
        .into_iter()
        .zip(buckets)
        .filter(|(_, query_groups)| !query_groups.is_empty())
        .map(|(session, mut query_groups)| {
            query_groups.reverse();
            SessionGroup {
                session_id: session.session_id,
                start_at: session.start_at,
                end_at: session.end_at,
                query_groups,
            }
        })
        .collect();
    sessions.reverse();

    TimelineView { topic_id: topic.topic.topic_id.clone(), title: topic.topic.title.clone(), detail, sessions }
}
