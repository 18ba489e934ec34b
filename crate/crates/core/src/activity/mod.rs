//! Topics, activity events and the per-user event-sourced workspace model.

mod event;
mod ids;
mod model;

pub use event::{ActivityEvent, EventKind, QuerySource};
pub use ids::{EventId, EventIdParseError, TopicId, UserId};
pub use model::{ActivityError, ActivityState, Command, ErrorClass, Topic, TopicState, TopicSummary, UserActivity};
