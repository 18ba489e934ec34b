use serde::{Deserialize, Serialize};

use crate::activity::{ActivityEvent, UserId};

pub const SCHEMA_VERSION: u32 = 1;

/// One line of a user's event log.
///
/// ```text
/// {"schema_version":1,"user_id":"u1","event_id":"e2","topic_id":"u1-t1","at":"2024-03-01T09:15:00.000Z","kind":"result_saved","payload":{"query_event_id":"e1","resource_id":"r42"}}
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub schema_version: u32,
    pub user_id: UserId,
    #[serde(flatten)]
    pub event: ActivityEvent,
}

impl EventRecord {
    pub fn new(user_id: UserId, event: ActivityEvent) -> Self {
        EventRecord { schema_version: SCHEMA_VERSION, user_id, event }
    }

    pub fn to_line(&self) -> Result<String, serde_json::Error> {
        let mut line = serde_json::to_string(self)?;
        line.push('\n');
        Ok(line)
    }
}
