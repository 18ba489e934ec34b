//! Per-user topic workspaces as a fold over activity events.
//!
//! Every mutation goes through two steps: [`UserActivity::decide`] checks a
//! [`Command`] against current state and produces the event it would append,
//! and [`UserActivity::apply`] folds an event into state. Replaying a log is
//! just `apply` in a loop, so live state and replayed state share one code
//! path. Callers that persist events decide first, write the event, then
//! apply it.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::event::{ActivityEvent, EventKind, QuerySource};
use super::ids::{EventId, TopicId, UserId};
use crate::catalog::Catalog;
use crate::search::tokenize;
use crate::time::Timestamp;
use crate::timeline::{build_timeline, TimelineDetail, TimelineView};

static NO_CATALOG: Catalog = Catalog::empty();

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub topic_id: TopicId,
    pub user_id: UserId,
    pub title: String,
    pub created_at: Timestamp,
    pub last_activity_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicSummary {
    #[serde(flatten)]
    pub topic: Topic,
    pub is_ongoing: bool,
}

/// Coarse error classes, one per externally visible error code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    BadRequest,
    NotFound,
    Conflict,
    NotOngoing,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActivityError {
    #[error("query text contains no searchable terms")]
    BlankQuery,
    #[error("topic title must not be empty")]
    EmptyTitle,
    #[error("topic {0} not found")]
    TopicNotFound(TopicId),
    #[error("query event {0} not found in topic")]
    QueryNotFound(EventId),
    #[error("resource {0:?} not found")]
    ResourceNotFound(String),
    #[error("resource {0:?} has no active save in this topic")]
    NotSaved(String),
    #[error("save event {0} is not an active save in this topic")]
    SaveNotActive(EventId),
    #[error("resource {resource_id:?} is already saved (event {save_event_id})")]
    AlreadySaved { resource_id: String, save_event_id: EventId },
    #[error("topic {0} is not the ongoing topic; resume it first")]
    NotOngoing(TopicId),
    #[error("topic {topic_id} must start with a fresh query, got {kind}")]
    TopicMustStartWithQuery { topic_id: TopicId, kind: &'static str },
    #[error("event {got} is not after {last} in topic {topic_id}")]
    OutOfOrder { topic_id: TopicId, last: EventId, got: EventId },
    #[error("event {event_id} at {at} precedes the previous event at {last_at}")]
    TimeRegression { event_id: EventId, at: Timestamp, last_at: Timestamp },
}

impl ActivityError {
    pub fn class(&self) -> ErrorClass {
        use ActivityError::*;
        match self {
            BlankQuery | EmptyTitle | TopicMustStartWithQuery { .. } | OutOfOrder { .. } | TimeRegression { .. } => {
                ErrorClass::BadRequest
            }
            TopicNotFound(_) | QueryNotFound(_) | ResourceNotFound(_) | NotSaved(_) | SaveNotActive(_) => {
                ErrorClass::NotFound
            }
            AlreadySaved { .. } => ErrorClass::Conflict,
            NotOngoing(_) => ErrorClass::NotOngoing,
        }
    }
}

/// A user intent, validated by [`UserActivity::decide`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    /// Query within the ongoing topic, creating one titled after the query
    /// if the user has none.
    IssueQuery {
        query_text: String,
    },
    /// Open a new topic titled after the query and make it ongoing.
    StartTopic {
        query_text: String,
    },
    ReissueQuery {
        topic_id: TopicId,
        query_event_id: EventId,
    },
    SaveResult {
        topic_id: TopicId,
        query_event_id: EventId,
        resource_id: String,
    },
    RemoveResult {
        topic_id: TopicId,
        resource_id: String,
    },
    RenameTopic {
        topic_id: TopicId,
        new_title: String,
    },
    ResumeTopic {
        topic_id: TopicId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicState {
    pub topic: Topic,
    events: Vec<ActivityEvent>,
    /// QueryIssued event id → query text.
    queries: BTreeMap<EventId, String>,
    /// Active (not removed) saves: resource id → ResultSaved event id.
    active_saves: BTreeMap<String, EventId>,
    /// Every ResultSaved event id → resource id.
    saves: BTreeMap<EventId, String>,
}

impl TopicState {
    fn open(topic: Topic) -> Self {
        TopicState {
            topic,
            events: Vec::new(),
            queries: BTreeMap::new(),
            active_saves: BTreeMap::new(),
            saves: BTreeMap::new(),
        }
    }

    pub fn events(&self) -> &[ActivityEvent] {
        &self.events
    }

    pub fn last_event(&self) -> Option<&ActivityEvent> {
        self.events.last()
    }

    pub fn query_text(&self, query_event_id: EventId) -> Option<&str> {
        self.queries.get(&query_event_id).map(String::as_str)
    }

    pub fn active_save(&self, resource_id: &str) -> Option<EventId> {
        self.active_saves.get(resource_id).copied()
    }

    pub fn active_resources(&self) -> impl Iterator<Item = &str> {
        self.active_saves.keys().map(String::as_str)
    }

    fn next_event_id(&self) -> EventId {
        self.events.last().map_or(EventId::new(1), |e| e.event_id.next())
    }

    /// Timestamps inside a topic never go backwards.
    fn stamp(&self, at: Timestamp) -> Timestamp {
        self.events.last().map_or(at, |e| e.at.max(at))
    }
}

/// All topics of one user plus which one is ongoing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserActivity {
    user_id: UserId,
    topics: BTreeMap<TopicId, TopicState>,
    ongoing_topic_id: Option<TopicId>,
}

impl UserActivity {
    pub fn new(user_id: UserId) -> Self {
        UserActivity { user_id, topics: BTreeMap::new(), ongoing_topic_id: None }
    }

    /// Rebuild state by folding events in log order.
    pub fn replay<'a, I>(user_id: UserId, events: I) -> Result<Self, ActivityError>
    where
        I: IntoIterator<Item = &'a ActivityEvent>,
    {
        let mut state = UserActivity::new(user_id);
        for event in events {
            state.apply(event.clone())?;
        }
        Ok(state)
    }

    pub fn user_id(&self) -> &UserId {
        &self.user_id
    }

    pub fn ongoing_topic_id(&self) -> Option<&TopicId> {
        self.ongoing_topic_id.as_ref()
    }

    pub fn topic(&self, topic_id: &TopicId) -> Option<&TopicState> {
        self.topics.get(topic_id)
    }

    pub fn topics(&self) -> impl Iterator<Item = &TopicState> {
        self.topics.values()
    }

    pub fn event_count(&self) -> usize {
        self.topics.values().map(|t| t.events.len()).sum()
    }

    fn topic_or_err(&self, topic_id: &TopicId) -> Result<&TopicState, ActivityError> {
        self.topics.get(topic_id).ok_or_else(|| ActivityError::TopicNotFound(topic_id.clone()))
    }

    fn ongoing_or_err(&self, topic_id: &TopicId) -> Result<&TopicState, ActivityError> {
        let state = self.topic_or_err(topic_id)?;
        if self.ongoing_topic_id.as_ref() != Some(topic_id) {
            return Err(ActivityError::NotOngoing(topic_id.clone()));
        }
        Ok(state)
    }

    fn new_topic_id(&self) -> TopicId {
        TopicId::new(format!("{}-t{}", self.user_id, self.topics.len() + 1))
    }

    /// Validate a command and return the event it would append. No state changes.
    pub fn decide(&self, command: &Command, at: Timestamp, catalog: &Catalog) -> Result<ActivityEvent, ActivityError> {
        let event = |topic: &TopicState, kind: EventKind| ActivityEvent {
            event_id: topic.next_event_id(),
            topic_id: topic.topic.topic_id.clone(),
            at: topic.stamp(at),
            kind,
        };
        let fresh_topic = |query_text: &str| ActivityEvent {
            event_id: EventId::new(1),
            topic_id: self.new_topic_id(),
            at,
            kind: EventKind::QueryIssued { query_text: query_text.to_string(), source: QuerySource::Fresh },
        };

        match command {
            Command::IssueQuery { query_text } => {
                check_query(query_text)?;
                match &self.ongoing_topic_id {
                    Some(topic_id) => {
                        let topic = self.topic_or_err(topic_id)?;
                        Ok(event(
                            topic,
                            EventKind::QueryIssued { query_text: query_text.clone(), source: QuerySource::Fresh },
                        ))
                    }
                    None => Ok(fresh_topic(query_text)),
                }
            }
            Command::StartTopic { query_text } => {
                check_query(query_text)?;
                Ok(fresh_topic(query_text))
            }
            Command::ReissueQuery { topic_id, query_event_id } => {
                let topic = self.ongoing_or_err(topic_id)?;
                let query_text =
                    topic.query_text(*query_event_id).ok_or(ActivityError::QueryNotFound(*query_event_id))?;
                Ok(event(
                    topic,
                    EventKind::QueryIssued {
                        query_text: query_text.to_string(),
                        source: QuerySource::ReissueOf { event_id: *query_event_id },
                    },
                ))
            }
            Command::SaveResult { topic_id, query_event_id, resource_id } => {
                let topic = self.ongoing_or_err(topic_id)?;
                if !topic.queries.contains_key(query_event_id) {
                    return Err(ActivityError::QueryNotFound(*query_event_id));
                }
                if !catalog.contains(resource_id) {
                    return Err(ActivityError::ResourceNotFound(resource_id.clone()));
                }
                if let Some(save_event_id) = topic.active_save(resource_id) {
                    return Err(ActivityError::AlreadySaved { resource_id: resource_id.clone(), save_event_id });
                }
                Ok(event(
                    topic,
                    EventKind::ResultSaved { query_event_id: *query_event_id, resource_id: resource_id.clone() },
                ))
            }
            Command::RemoveResult { topic_id, resource_id } => {
                let topic = self.topic_or_err(topic_id)?;
                let save_event_id =
                    topic.active_save(resource_id).ok_or_else(|| ActivityError::NotSaved(resource_id.clone()))?;
                Ok(event(topic, EventKind::ResultRemoved { save_event_id }))
            }
            Command::RenameTopic { topic_id, new_title } => {
                let topic = self.topic_or_err(topic_id)?;
                if new_title.trim().is_empty() {
                    return Err(ActivityError::EmptyTitle);
                }
                Ok(event(topic, EventKind::TopicRenamed { new_title: new_title.clone() }))
            }
            Command::ResumeTopic { topic_id } => {
                let topic = self.topic_or_err(topic_id)?;
                Ok(event(topic, EventKind::TopicResumed))
            }
        }
    }

    /// Fold one event into state, enforcing the log invariants.
    pub fn apply(&mut self, event: ActivityEvent) -> Result<(), ActivityError> {
        if !self.topics.contains_key(&event.topic_id) {
            return self.open_topic(event);
        }
        let topic_id = event.topic_id.clone();
        let topic = self.topics.get_mut(&topic_id).expect("checked above");

        if let Some(last) = topic.events.last() {
            if event.event_id <= last.event_id {
                return Err(ActivityError::OutOfOrder { topic_id, last: last.event_id, got: event.event_id });
            }
            if event.at < last.at {
                return Err(ActivityError::TimeRegression { event_id: event.event_id, at: event.at, last_at: last.at });
            }
        }

        match &event.kind {
            EventKind::QueryIssued { query_text, source } => {
                check_query(query_text)?;
                if let QuerySource::ReissueOf { event_id } = source {
                    if !topic.queries.contains_key(event_id) {
                        return Err(ActivityError::QueryNotFound(*event_id));
                    }
                }
                topic.queries.insert(event.event_id, query_text.clone());
            }
            EventKind::ResultSaved { query_event_id, resource_id } => {
                if !topic.queries.contains_key(query_event_id) {
                    return Err(ActivityError::QueryNotFound(*query_event_id));
                }
                if let Some(&save_event_id) = topic.active_saves.get(resource_id) {
                    return Err(ActivityError::AlreadySaved { resource_id: resource_id.clone(), save_event_id });
                }
                topic.active_saves.insert(resource_id.clone(), event.event_id);
                topic.saves.insert(event.event_id, resource_id.clone());
            }
            EventKind::ResultRemoved { save_event_id } => {
                let resource_id = topic
                    .saves
                    .get(save_event_id)
                    .filter(|rid| topic.active_saves.get(*rid) == Some(save_event_id))
                    .cloned()
                    .ok_or(ActivityError::SaveNotActive(*save_event_id))?;
                topic.active_saves.remove(&resource_id);
            }
            EventKind::TopicRenamed { new_title } => {
                if new_title.trim().is_empty() {
                    return Err(ActivityError::EmptyTitle);
                }
                topic.topic.title = new_title.clone();
            }
            EventKind::TopicResumed => {
                self.ongoing_topic_id = Some(topic_id);
            }
        }

        topic.topic.last_activity_at = event.at;
        topic.events.push(event);
        Ok(())
    }

    fn open_topic(&mut self, event: ActivityEvent) -> Result<(), ActivityError> {
        let EventKind::QueryIssued { query_text, source: QuerySource::Fresh } = &event.kind else {
            return Err(ActivityError::TopicMustStartWithQuery {
                topic_id: event.topic_id.clone(),
                kind: event.kind.name(),
            });
        };
        check_query(query_text)?;
        let mut state = TopicState::open(Topic {
            topic_id: event.topic_id.clone(),
            user_id: self.user_id.clone(),
            title: query_text.clone(),
            created_at: event.at,
            last_activity_at: event.at,
        });
        state.queries.insert(event.event_id, query_text.clone());
        self.ongoing_topic_id = Some(event.topic_id.clone());
        state.events.push(event);
        self.topics.insert(state.topic.topic_id.clone(), state);
        Ok(())
    }

    /// `decide` followed by `apply`.
    pub fn execute(
        &mut self,
        command: &Command,
        at: Timestamp,
        catalog: &Catalog,
    ) -> Result<ActivityEvent, ActivityError> {
        let event = self.decide(command, at, catalog)?;
        self.apply(event.clone())?;
        Ok(event)
    }

    pub fn issue_query(&mut self, query_text: &str, at: Timestamp) -> Result<(TopicId, EventId), ActivityError> {
        let e = self.execute(&Command::IssueQuery { query_text: query_text.to_string() }, at, &NO_CATALOG)?;
        Ok((e.topic_id, e.event_id))
    }

    pub fn start_topic(&mut self, query_text: &str, at: Timestamp) -> Result<(TopicId, EventId), ActivityError> {
        let e = self.execute(&Command::StartTopic { query_text: query_text.to_string() }, at, &NO_CATALOG)?;
        Ok((e.topic_id, e.event_id))
    }

    pub fn reissue_query(
        &mut self,
        topic_id: &TopicId,
        query_event_id: EventId,
        at: Timestamp,
    ) -> Result<EventId, ActivityError> {
        let cmd = Command::ReissueQuery { topic_id: topic_id.clone(), query_event_id };
        Ok(self.execute(&cmd, at, &NO_CATALOG)?.event_id)
    }

    pub fn save_result(
        &mut self,
        topic_id: &TopicId,
        query_event_id: EventId,
        resource_id: &str,
        at: Timestamp,
        catalog: &Catalog,
    ) -> Result<EventId, ActivityError> {
        let cmd =
            Command::SaveResult { topic_id: topic_id.clone(), query_event_id, resource_id: resource_id.to_string() };
        Ok(self.execute(&cmd, at, catalog)?.event_id)
    }

    /// Returns the id of the save event that was struck out.
    pub fn remove_result(
        &mut self,
        topic_id: &TopicId,
        resource_id: &str,
        at: Timestamp,
    ) -> Result<EventId, ActivityError> {
        let cmd = Command::RemoveResult { topic_id: topic_id.clone(), resource_id: resource_id.to_string() };
        match self.execute(&cmd, at, &NO_CATALOG)?.kind {
            EventKind::ResultRemoved { save_event_id } => Ok(save_event_id),
            _ => unreachable!("RemoveResult always yields ResultRemoved"),
        }
    }

    pub fn rename_topic(&mut self, topic_id: &TopicId, new_title: &str, at: Timestamp) -> Result<(), ActivityError> {
        let cmd = Command::RenameTopic { topic_id: topic_id.clone(), new_title: new_title.to_string() };
        self.execute(&cmd, at, &NO_CATALOG).map(drop)
    }

    pub fn resume_topic(&mut self, topic_id: &TopicId, at: Timestamp) -> Result<(), ActivityError> {
        self.execute(&Command::ResumeTopic { topic_id: topic_id.clone() }, at, &NO_CATALOG).map(drop)
    }

    /// Topics by most recent activity, newest first; ties by topic id.
    pub fn list_topics(&self) -> Vec<TopicSummary> {
        let mut list: Vec<TopicSummary> = self
            .topics
            .values()
            .map(|t| TopicSummary {
                topic: t.topic.clone(),
                is_ongoing: self.ongoing_topic_id.as_ref() == Some(&t.topic.topic_id),
            })
            .collect();
        list.sort_by(|a, b| {
            b.topic
                .last_activity_at
                .cmp(&a.topic.last_activity_at)
                .then_with(|| a.topic.topic_id.cmp(&b.topic.topic_id))
        });
        list
    }

    pub fn timeline(
        &self,
        topic_id: &TopicId,
        detail: TimelineDetail,
        catalog: &Catalog,
        idle_gap: Duration,
    ) -> Result<TimelineView, ActivityError> {
        let topic = self.topic_or_err(topic_id)?;
        Ok(build_timeline(topic, detail, catalog, idle_gap))
    }
}

fn check_query(text: &str) -> Result<(), ActivityError> {
    if tokenize(text).is_empty() {
        Err(ActivityError::BlankQuery)
    } else {
        Ok(())
    }
}

/// Every user's activity, keyed by user id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityState {
    pub users: BTreeMap<UserId, UserActivity>,
}

impl ActivityState {
    pub fn user(&self, user_id: &UserId) -> Option<&UserActivity> {
        self.users.get(user_id)
    }

    pub fn owner_of(&self, topic_id: &TopicId) -> Option<&UserId> {
        self.users.iter().find(|(_, u)| u.topics.contains_key(topic_id)).map(|(id, _)| id)
    }

    /// Topic list for a user; unknown users have no topics.
    pub fn list_topics(&self, user_id: &UserId) -> Vec<TopicSummary> {
        self.users.get(user_id).map(UserActivity::list_topics).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Resource, ResourceType};

    const MIN: i64 = 60_000;

    fn t(minutes: i64) -> Timestamp {
        Timestamp::from_millis(1_700_000_000_000 + minutes * MIN)
    }

    fn catalog() -> Catalog {
        Catalog::from_resources(["r1", "r2", "r42"].map(|id| Resource {
            resource_id: id.into(),
            title: format!("Title {id}"),
            authors: vec![],
            year: Some(2001),
            resource_type: ResourceType::Book,
            description: None,
            cover_ref: None,
        }))
    }

    fn user() -> UserActivity {
        UserActivity::new(UserId::new("u1"))
    }

    #[test]
    fn first_query_creates_titled_ongoing_topic() {
        let mut u = user();
        let (tid, qid) = u.issue_query("French Revolution", t(0)).unwrap();
        assert_eq!(qid, EventId::new(1));
        assert_eq!(u.ongoing_topic_id(), Some(&tid));
        let topic = u.topic(&tid).unwrap();
        assert_eq!(topic.topic.title, "French Revolution");
        assert_eq!(topic.events().len(), 1);

        let (tid2, qid2) = u.issue_query("storming of the bastille", t(1)).unwrap();
        assert_eq!(tid2, tid);
        assert_eq!(qid2, EventId::new(2));
        assert_eq!(u.topic(&tid).unwrap().topic.title, "French Revolution");
    }

    #[test]
    fn blank_query_rejected() {
        let mut u = user();
        assert_eq!(u.issue_query("   ", t(0)), Err(ActivityError::BlankQuery));
        assert_eq!(u.issue_query("?!", t(0)), Err(ActivityError::BlankQuery));
        assert_eq!(u.event_count(), 0);
        assert!(u.ongoing_topic_id().is_none());
    }

    #[test]
    fn reissue_appends_new_event() {
        let mut u = user();
        let (tid, q1) = u.issue_query("indigenous people", t(0)).unwrap();
        let q2 = u.reissue_query(&tid, q1, t(5)).unwrap();
        assert_eq!(q2, EventId::new(2));
        let last = u.topic(&tid).unwrap().last_event().unwrap();
        assert_eq!(
            last.kind,
            EventKind::QueryIssued {
                query_text: "indigenous people".into(),
                source: QuerySource::ReissueOf { event_id: q1 }
            }
        );
        let q3 = u.reissue_query(&tid, q2, t(6)).unwrap();
        let last = u.topic(&tid).unwrap().last_event().unwrap();
        assert!(matches!(
            last.kind,
            EventKind::QueryIssued { source: QuerySource::ReissueOf { event_id }, .. } if event_id == q2
        ));
        assert_eq!(q3, EventId::new(3));
        assert_eq!(u.reissue_query(&tid, EventId::new(99), t(7)), Err(ActivityError::QueryNotFound(EventId::new(99))));
    }

    #[test]
    fn reissue_requires_ongoing_topic() {
        let mut u = user();
        let (t1, q1) = u.issue_query("first topic", t(0)).unwrap();
        u.start_topic("second topic", t(1)).unwrap();
        let before = u.event_count();
        assert_eq!(u.reissue_query(&t1, q1, t(2)), Err(ActivityError::NotOngoing(t1.clone())));
        assert_eq!(u.event_count(), before);
    }

    #[test]
    fn save_conflict_and_resave_after_removal() {
        let cat = catalog();
        let mut u = user();
        let (tid, q1) = u.issue_query("indigenous people", t(0)).unwrap();
        let s1 = u.save_result(&tid, q1, "r42", t(1), &cat).unwrap();
        let before = u.event_count();
        assert_eq!(
            u.save_result(&tid, q1, "r42", t(2), &cat),
            Err(ActivityError::AlreadySaved { resource_id: "r42".into(), save_event_id: s1 })
        );
        assert_eq!(u.event_count(), before);
        assert_eq!(u.save_result(&tid, q1, "nope", t(2), &cat), Err(ActivityError::ResourceNotFound("nope".into())));
        assert_eq!(
            u.save_result(&tid, EventId::new(50), "r1", t(2), &cat),
            Err(ActivityError::QueryNotFound(EventId::new(50)))
        );

        assert_eq!(u.remove_result(&tid, "r42", t(3)), Ok(s1));
        assert_eq!(u.remove_result(&tid, "r42", t(4)), Err(ActivityError::NotSaved("r42".into())));

        let (_, q2) = u.issue_query("treaties", t(5)).unwrap();
        let s2 = u.save_result(&tid, q2, "r42", t(6), &cat).unwrap();
        assert_ne!(s1, s2);
        assert_eq!(u.topic(&tid).unwrap().active_save("r42"), Some(s2));
    }

    #[test]
    fn save_requires_ongoing_topic() {
        let cat = catalog();
        let mut u = user();
        let (t1, q1) = u.issue_query("first", t(0)).unwrap();
        u.start_topic("second", t(1)).unwrap();
        assert_eq!(u.save_result(&t1, q1, "r1", t(2), &cat), Err(ActivityError::NotOngoing(t1)));
    }

    #[test]
    fn rename_preserves_history() {
        let mut u = user();
        let (tid, _) = u.issue_query("indigenous people", t(0)).unwrap();
        u.rename_topic(&tid, "First Nations", t(1)).unwrap();
        assert_eq!(u.topic(&tid).unwrap().topic.title, "First Nations");
        u.rename_topic(&tid, "First Nations", t(2)).unwrap();
        assert_eq!(u.topic(&tid).unwrap().events().len(), 3);
        assert_eq!(u.rename_topic(&tid, "  ", t(3)), Err(ActivityError::EmptyTitle));
        let unknown = TopicId::new("nope");
        assert_eq!(u.rename_topic(&unknown, "x", t(3)), Err(ActivityError::TopicNotFound(unknown)));
    }

    #[test]
    fn resume_switches_ongoing_topic_and_routes_queries() {
        let mut u = user();
        let (t1, _) = u.issue_query("first", t(0)).unwrap();
        let (t2, _) = u.start_topic("second", t(1)).unwrap();
        assert_eq!(u.ongoing_topic_id(), Some(&t2));
        u.resume_topic(&t1, t(2)).unwrap();
        assert_eq!(u.ongoing_topic_id(), Some(&t1));
        u.resume_topic(&t1, t(3)).unwrap();
        assert_eq!(u.ongoing_topic_id(), Some(&t1));
        let (routed, _) = u.issue_query("third query", t(4)).unwrap();
        assert_eq!(routed, t1);
        let unknown = TopicId::new("zz");
        assert_eq!(u.resume_topic(&unknown, t(5)), Err(ActivityError::TopicNotFound(unknown)));
    }

    #[test]
    fn topic_listing_by_recent_activity() {
        let mut u = user();
        let (t1, q1) = u.issue_query("older", t(50)).unwrap();
        let (t2, _) = u.start_topic("newer", t(100)).unwrap();
        let order: Vec<_> = u.list_topics().into_iter().map(|s| (s.topic.topic_id, s.is_ongoing)).collect();
        assert_eq!(order, vec![(t2.clone(), true), (t1.clone(), false)]);

        u.resume_topic(&t1, t(200)).unwrap();
        u.reissue_query(&t1, q1, t(201)).unwrap();
        let order: Vec<_> = u.list_topics().into_iter().map(|s| (s.topic.topic_id, s.is_ongoing)).collect();
        assert_eq!(order, vec![(t1, true), (t2, false)]);
    }

    #[test]
    fn unknown_user_has_no_topics() {
        assert!(ActivityState::default().list_topics(&UserId::new("ghost")).is_empty());
    }

    #[test]
    fn timestamps_never_regress_within_topic() {
        let mut u = user();
        let (tid, _) = u.issue_query("a query", t(10)).unwrap();
        u.issue_query("earlier clock", t(5)).unwrap();
        let events = u.topic(&tid).unwrap().events();
        assert_eq!(events[1].at, t(10));
    }

    #[test]
    fn apply_rejects_invalid_logs() {
        let mut u = user();
        let (tid, _) = u.issue_query("a query", t(0)).unwrap();
        let replayed = |kind: EventKind, id: u64, at: Timestamp| ActivityEvent {
            event_id: EventId::new(id),
            topic_id: tid.clone(),
            at,
            kind,
        };
        let mut probe = u.clone();
        assert!(matches!(
            probe.apply(replayed(EventKind::TopicResumed, 1, t(1))),
            Err(ActivityError::OutOfOrder { .. })
        ));
        assert!(matches!(
            probe.apply(replayed(EventKind::TopicResumed, 2, t(-1))),
            Err(ActivityError::TimeRegression { .. })
        ));
        assert!(matches!(
            probe.apply(replayed(EventKind::ResultRemoved { save_event_id: EventId::new(1) }, 2, t(1))),
            Err(ActivityError::SaveNotActive(_))
        ));
        let orphan = ActivityEvent {
            event_id: EventId::new(1),
            topic_id: TopicId::new("other"),
            at: t(1),
            kind: EventKind::TopicResumed,
        };
        assert!(matches!(probe.apply(orphan), Err(ActivityError::TopicMustStartWithQuery { .. })));
        assert_eq!(probe, u);
    }

    #[test]
    fn replay_equals_live_state() {
        let cat = catalog();
        let mut u = user();
        let (t1, q1) = u.issue_query("indigenous people", t(0)).unwrap();
        u.save_result(&t1, q1, "r1", t(1), &cat).unwrap();
        u.save_result(&t1, q1, "r2", t(2), &cat).unwrap();
        u.remove_result(&t1, "r1", t(3)).unwrap();
        let (t2, _) = u.start_topic("other", t(4)).unwrap();
        u.rename_topic(&t2, "Renamed", t(5)).unwrap();
        u.resume_topic(&t1, t(6)).unwrap();

        let mut log: Vec<ActivityEvent> = u.topics().flat_map(|s| s.events().iter().cloned()).collect();
        log.sort_by_key(|e| (e.at, e.topic_id.clone(), e.event_id));
        let replayed = UserActivity::replay(UserId::new("u1"), &log).unwrap();
        assert_eq!(replayed, u);
    }

    #[test]
    fn error_classes() {
        assert_eq!(ActivityError::BlankQuery.class(), ErrorClass::BadRequest);
        assert_eq!(ActivityError::NotSaved("x".into()).class(), ErrorClass::NotFound);
        assert_eq!(
            ActivityError::AlreadySaved { resource_id: "x".into(), save_event_id: EventId::new(1) }.class(),
            ErrorClass::Conflict
        );
        assert_eq!(ActivityError::NotOngoing(TopicId::new("t")).class(), ErrorClass::NotOngoing);
    }
}
