use axum::extract::{FromRequest, FromRequestParts, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::Json;
use serde::{Deserialize, Serialize};

use timelines_core::activity::{ActivityEvent, Command, EventId, EventKind, TopicId, TopicSummary, UserId};
use timelines_core::search::{check_paging, DEFAULT_PAGE_SIZE};
use timelines_core::timeline::{TimelineDetail, TimelineView};
use timelines_core::Resource;

use crate::clock;
use crate::error::ApiError;
use crate::state::{AppState, UserSlot};

#[derive(FromRequest)]
#[from_request(via(Json), rejection(ApiError))]
pub(crate) struct ApiJson<T>(T);

#[derive(FromRequestParts)]
#[from_request(via(Query), rejection(ApiError))]
pub(crate) struct ApiQuery<T>(T);

#[derive(FromRequestParts)]
#[from_request(via(Path), rejection(ApiError))]
pub(crate) struct ApiPath<T>(T);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewUser {
    pub user_id: UserId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryRequest {
    pub text: String,
    #[serde(default)]
    pub page: Option<usize>,
    #[serde(default)]
    pub page_size: Option<usize>,
    /// Start a new topic titled after this query instead of querying the
    /// ongoing one.
    #[serde(default)]
    pub new_topic: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Paging {
    pub page: Option<usize>,
    pub page_size: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaveRequest {
    pub query_event_id: EventId,
    pub resource_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoveRequest {
    pub resource_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OngoingRequest {
    pub topic_id: TopicId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenameRequest {
    pub title: String,
}

#[derive(Debug, Clone, Deserialize)]
pub(crate) struct TimelineParams {
    detail: Option<TimelineDetail>,
}

#[derive(Debug, Clone, Deserialize)]
pub(crate) struct ExportParams {
    user: UserId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultCard {
    #[serde(flatten)]
    pub resource: Resource,
    pub score: f64,
    /// The resource has an active save in the ongoing topic.
    pub saved_now: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerpResponse {
    pub topic_id: TopicId,
    pub query_event_id: EventId,
    pub query_text: String,
    pub page: usize,
    pub page_size: usize,
    pub total_hits: usize,
    pub results: Vec<ResultCard>,
    pub overview: TimelineView,
}

fn paging(page: Option<usize>, page_size: Option<usize>) -> Result<(usize, usize), ApiError> {
    let page = page.unwrap_or(1);
    let page_size = page_size.unwrap_or(DEFAULT_PAGE_SIZE);
    check_paging(page, page_size)?;
    Ok((page, page_size))
}

fn overview(state: &AppState, slot: &UserSlot, topic_id: &TopicId) -> Result<TimelineView, ApiError> {
    Ok(slot.activity.timeline(topic_id, TimelineDetail::Overview, state.catalog(), state.idle_gap())?)
}

fn summary(slot: &UserSlot, topic_id: &TopicId) -> Result<TopicSummary, ApiError> {
    slot.activity
        .list_topics()
        .into_iter()
        .find(|t| &t.topic.topic_id == topic_id)
        .ok_or_else(|| ApiError::not_found(format!("topic {topic_id} not found")))
}

fn serp(
    state: &AppState,
    slot: &UserSlot,
    event: &ActivityEvent,
    page: usize,
    page_size: usize,
) -> Result<SerpResponse, ApiError> {
    let EventKind::QueryIssued { query_text, .. } = &event.kind else {
        unreachable!("serp is only built for query events")
    };
    let found = state.index().search(query_text, page, page_size)?;
    let topic = slot
        .activity
        .topic(&event.topic_id)
        .ok_or_else(|| ApiError::not_found(format!("topic {} not found", event.topic_id)))?;
    let results = found
        .hits
        .iter()
        .filter_map(|hit| {
            let resource = state.catalog().get(&hit.resource_id)?;
            Some(ResultCard {
                resource: resource.clone(),
                score: hit.score,
                saved_now: topic.active_save(&hit.resource_id).is_some(),
            })
        })
        .collect();
    Ok(SerpResponse {
        topic_id: event.topic_id.clone(),
        query_event_id: event.event_id,
        query_text: query_text.clone(),
        page,
        page_size,
        total_hits: found.total_hits,
        results,
        overview: overview(state, slot, &event.topic_id)?,
    })
}

pub(crate) async fn create_user(State(state): State<AppState>) -> Result<(StatusCode, Json<NewUser>), ApiError> {
    let user_id = state.create_user()?;
    Ok((StatusCode::CREATED, Json(NewUser { user_id })))
}

pub(crate) async fn issue_query(
    State(state): State<AppState>,
    ApiPath(user_id): ApiPath<UserId>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<QueryRequest>,
) -> Result<Json<SerpResponse>, ApiError> {
    let client = clock::client_time(&headers)?;
    let (page, page_size) = paging(req.page, req.page_size)?;
    let command = if req.new_topic {
        Command::StartTopic { query_text: req.text }
    } else {
        Command::IssueQuery { query_text: req.text }
    };
    state.with_user(&user_id, |slot| {
        let event = state.execute(slot, &command, client)?;
        serp(&state, slot, &event, page, page_size).map(Json)
    })
}

pub(crate) async fn reissue_query(
    State(state): State<AppState>,
    ApiPath((topic_id, query_event_id)): ApiPath<(TopicId, EventId)>,
    ApiQuery(p): ApiQuery<Paging>,
    headers: HeaderMap,
) -> Result<Json<SerpResponse>, ApiError> {
    let client = clock::client_time(&headers)?;
    let (page, page_size) = paging(p.page, p.page_size)?;
    let owner = state.owner_of(&topic_id)?;
    state.with_user(&owner, |slot| {
        let event = state.execute(slot, &Command::ReissueQuery { topic_id, query_event_id }, client)?;
        serp(&state, slot, &event, page, page_size).map(Json)
    })
}

pub(crate) async fn save_result(
    State(state): State<AppState>,
    ApiPath(topic_id): ApiPath<TopicId>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<SaveRequest>,
) -> Result<Json<TimelineView>, ApiError> {
    let client = clock::client_time(&headers)?;
    let owner = state.owner_of(&topic_id)?;
    state.with_user(&owner, |slot| {
        let command = Command::SaveResult {
            topic_id: topic_id.clone(),
            query_event_id: req.query_event_id,
            resource_id: req.resource_id,
        };
        state.execute(slot, &command, client)?;
        overview(&state, slot, &topic_id).map(Json)
    })
}

pub(crate) async fn remove_result(
    State(state): State<AppState>,
    ApiPath(topic_id): ApiPath<TopicId>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<RemoveRequest>,
) -> Result<Json<TimelineView>, ApiError> {
    let client = clock::client_time(&headers)?;
    let owner = state.owner_of(&topic_id)?;
    state.with_user(&owner, |slot| {
        let command = Command::RemoveResult { topic_id: topic_id.clone(), resource_id: req.resource_id };
        state.execute(slot, &command, client)?;
        overview(&state, slot, &topic_id).map(Json)
    })
}

pub(crate) async fn list_topics(
    State(state): State<AppState>,
    ApiPath(user_id): ApiPath<UserId>,
) -> Result<Json<Vec<TopicSummary>>, ApiError> {
    state.with_user(&user_id, |slot| Ok(Json(slot.activity.list_topics())))
}

pub(crate) async fn timeline(
    State(state): State<AppState>,
    ApiPath(topic_id): ApiPath<TopicId>,
    ApiQuery(params): ApiQuery<TimelineParams>,
) -> Result<Json<TimelineView>, ApiError> {
    let detail = params.detail.unwrap_or(TimelineDetail::Overview);
    let owner = state.owner_of(&topic_id)?;
    state.with_user(&owner, |slot| {
        Ok(Json(slot.activity.timeline(&topic_id, detail, state.catalog(), state.idle_gap())?))
    })
}

pub(crate) async fn set_ongoing(
    State(state): State<AppState>,
    ApiPath(user_id): ApiPath<UserId>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<OngoingRequest>,
) -> Result<Json<TopicSummary>, ApiError> {
    let client = clock::client_time(&headers)?;
    state.with_user(&user_id, |slot| {
        // Topics of other users are reported exactly like missing ones.
        let command = Command::ResumeTopic { topic_id: req.topic_id.clone() };
        state.execute(slot, &command, client)?;
        summary(slot, &req.topic_id).map(Json)
    })
}

pub(crate) async fn rename_topic(
    State(state): State<AppState>,
    ApiPath(topic_id): ApiPath<TopicId>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<RenameRequest>,
) -> Result<Json<TopicSummary>, ApiError> {
    let client = clock::client_time(&headers)?;
    let owner = state.owner_of(&topic_id)?;
    state.with_user(&owner, |slot| {
        let command = Command::RenameTopic { topic_id: topic_id.clone(), new_title: req.title };
        state.execute(slot, &command, client)?;
        summary(slot, &topic_id).map(Json)
    })
}

pub(crate) async fn get_resource(
    State(state): State<AppState>,
    ApiPath(resource_id): ApiPath<String>,
) -> Result<Json<Resource>, ApiError> {
    state
        .catalog()
        .get(&resource_id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("resource {resource_id:?} not found")))
}

pub(crate) async fn export_events(
    State(state): State<AppState>,
    ApiQuery(params): ApiQuery<ExportParams>,
) -> Result<impl IntoResponse, ApiError> {
    let body = state.with_user(&params.user, |slot| {
        std::fs::read(slot.log_path()).map_err(|e| ApiError::new(crate::error::ErrorCode::IoError, e.to_string()))
    })?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body))
}

pub(crate) async fn not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}
