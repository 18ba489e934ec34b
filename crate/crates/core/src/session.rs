//! Idle-gap session segmentation and per-session durations.
//!
//! A session is a maximal run of consecutive events in which no two
//! neighbours are more than `idle_gap` apart. A gap exactly equal to
//! `idle_gap` stays inside the session.

use std::ops::Range;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::activity::{ActivityEvent, EventId};
use crate::time::{duration_millis, Timestamp};

pub const DEFAULT_IDLE_GAP: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    /// 1-based ordinal, oldest session first.
    pub session_id: usize,
    pub start_at: Timestamp,
    pub end_at: Timestamp,
    pub event_ids: Vec<EventId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDuration {
    pub session_id: usize,
    pub start_at: Timestamp,
    pub end_at: Timestamp,
    pub event_count: usize,
    pub duration_secs: f64,
}

/// Greedy left-to-right split of ordered timestamps into index ranges.
pub fn segment_timestamps(timestamps: &[Timestamp], idle_gap: Duration) -> Vec<Range<usize>> {
    let gap = duration_millis(idle_gap);
    let mut ranges = Vec::new();
    let mut start = 0;
    for i in 1..timestamps.len() {
        if timestamps[i].millis_since(timestamps[i - 1]) > gap {
            ranges.push(start..i);
            start = i;
        }
    }
    if !timestamps.is_empty() {
        ranges.push(start..timestamps.len());
    }
    ranges
}

pub fn segment_sessions(events: &[ActivityEvent], idle_gap: Duration) -> Vec<Session> {
    let stamps: Vec<Timestamp> = events.iter().map(|e| e.at).collect();
    segment_timestamps(&stamps, idle_gap)
        .into_iter()
        .enumerate()
        .map(|(i, range)| {
            let members = &events[range];
            Session {
                session_id: i + 1,
                start_at: members[0].at,
                end_at: members[members.len() - 1].at,
                event_ids: members.iter().map(|e| e.event_id).collect(),
            }
        })
        .collect()
}

pub fn compute_session_durations(events: &[ActivityEvent], idle_gap: Duration) -> Vec<SessionDuration> {
    segment_sessions(events, idle_gap)
        .into_iter()
        .map(|s| SessionDuration {
            session_id: s.session_id,
            start_at: s.start_at,
            end_at: s.end_at,
            event_count: s.event_ids.len(),
            duration_secs: s.end_at.millis_since(s.start_at) as f64 / 1000.0,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activity::EventKind;

    fn events_at(minutes: &[i64]) -> Vec<ActivityEvent> {
        minutes
            .iter()
            .enumerate()
            .map(|(i, &m)| ActivityEvent {
                event_id: EventId::new(i as u64 + 1),
                topic_id: "t".into(),
                at: Timestamp::from_millis(m * 60_000),
                kind: EventKind::TopicResumed,
            })
            .collect()
    }

    #[test]
    fn empty() {
        assert!(segment_sessions(&[], DEFAULT_IDLE_GAP).is_empty());
        assert!(compute_session_durations(&[], DEFAULT_IDLE_GAP).is_empty());
    }

    #[test]
    fn gap_over_threshold_splits() {
        let sessions = segment_sessions(&events_at(&[0, 10, 45]), DEFAULT_IDLE_GAP);
        assert_eq!(sessions.len(), 2);
        assert_eq!(sessions[0].event_ids, [EventId::new(1), EventId::new(2)]);
        assert_eq!(sessions[0].start_at, Timestamp::from_millis(0));
        assert_eq!(sessions[0].end_at, Timestamp::from_millis(10 * 60_000));
        assert_eq!(sessions[1].event_ids, [EventId::new(3)]);
        assert_eq!(sessions[1].session_id, 2);
    }

    #[test]
    fn gap_equal_to_threshold_does_not_split() {
        assert_eq!(segment_sessions(&events_at(&[0, 30, 60]), DEFAULT_IDLE_GAP).len(), 1);
    }

    #[test]
    fn durations() {
        let single = compute_session_durations(&events_at(&[3]), DEFAULT_IDLE_GAP);
        assert_eq!(single[0].duration_secs, 0.0);

        let mut evs = events_at(&[0, 0]);
        evs[1].at = Timestamp::from_millis(533_000);
        let d = compute_session_durations(&evs, DEFAULT_IDLE_GAP);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].duration_secs, 533.0);
        assert_eq!(d[0].event_count, 2);
    }
}
