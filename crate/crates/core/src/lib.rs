//! Core of the search timelines service: the library catalog, an embedded
//! BM25 index, the event-sourced topic workspace model, session
//! segmentation, timeline construction and the append-only event store.

pub mod activity;
pub mod catalog;
pub mod persistence;
pub mod search;
pub mod session;
pub mod time;
pub mod timeline;

pub use activity::{
    ActivityError, ActivityEvent, ActivityState, Command, EventId, EventKind, TopicId, UserActivity, UserId,
};
pub use catalog::{Catalog, CatalogStats, Resource, ResourceType};
pub use search::{IndexedCatalog, SearchPage};
pub use time::Timestamp;
pub use timeline::{TimelineDetail, TimelineView};
