//! Event time resolution at the HTTP boundary.
//!
//! Clients may send their own clock in `X-Client-Time` (RFC 3339). A client
//! time is trusted unless it lags the topic's previous event by more than
//! [`CLOCK_SKEW`], in which case the server clock is used instead. The
//! activity model still clamps the result so that time never runs backwards
//! within a topic.

use std::time::Duration;

use axum::http::HeaderMap;

use crate::error::ApiError;
use timelines_core::Timestamp;

pub const CLIENT_TIME_HEADER: &str = "x-client-time";
pub const CLOCK_SKEW: Duration = Duration::from_secs(5);

pub fn client_time(headers: &HeaderMap) -> Result<Option<Timestamp>, ApiError> {
    let Some(value) = headers.get(CLIENT_TIME_HEADER) else {
        return Ok(None);
    };
    let text = value.to_str().map_err(|_| ApiError::bad_request("X-Client-Time is not valid text"))?;
    text.trim().parse().map(Some).map_err(|e| ApiError::bad_request(format!("X-Client-Time: {e}")))
}

pub fn resolve(client: Option<Timestamp>, last: Option<Timestamp>, server_now: Timestamp) -> Timestamp {
    match (client, last) {
        (None, _) => server_now,
        (Some(c), None) => c,
        (Some(c), Some(last)) if c >= last.saturating_sub(CLOCK_SKEW) => c,
        (Some(_), Some(_)) => server_now,
    }
}
