//! HTTP routes. Every handler runs its operation on the blocking pool and
//! answers with a JSON document: the operation's result, or an
//! [`ApiError`] whose code picks the status.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use chrono::Utc;
use loadcast_core::ingestion::SourceKind;
use serde::Serialize;

use crate::error::ApiError;
use crate::ops::{self, parse_bool, parse_country, parse_hours, parse_instant, Context, OpResult};

/// Media type of every response body.
pub const CONTENT_TYPE: &str = "application/json";

/// Largest accepted CSV upload.
pub const MAX_UPLOAD_BYTES: usize = 64 * 1024 * 1024;

type Params = Query<HashMap<String, String>>;

pub fn router(ctx: Context) -> Router {
    Router::new()
        .route("/countries", get(countries))
        .route("/forecast/{country}", get(latest_forecast).post(issue_forecast))
        .route("/data/{country}", post(ingest))
        .route("/models/{country}/rebuild", post(rebuild))
        .route("/quality", get(quality))
        .route("/evaluate/{country}", get(evaluate))
        .fallback(unknown_route)
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(Arc::new(ctx))
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, CONTENT_TYPE)], body).into_response()
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.code.http_status()).expect("mapped statuses are valid");
        json_response(status, ops::to_json(&self))
    }
}

async fn blocking<T, F>(ctx: Arc<Context>, f: F) -> Response
where
    T: Serialize + Send + 'static,
    F: FnOnce(&Context) -> OpResult<T> + Send + 'static,
{
    match tokio::task::spawn_blocking(move || f(&ctx)).await {
        Ok(Ok(value)) => json_response(StatusCode::OK, ops::to_json(&value)),
        Ok(Err(e)) => e.into_response(),
        Err(join) => ApiError::internal(format!("handler failed: {join}")).into_response(),
    }
}

fn optional<T>(params: &HashMap<String, String>, key: &str, parse: impl Fn(&str) -> OpResult<T>) -> OpResult<Option<T>> {
    params.get(key).map(|v| parse(v)).transpose()
}

fn required<T>(params: &HashMap<String, String>, key: &str, parse: impl Fn(&str) -> OpResult<T>) -> OpResult<T> {
    optional(params, key, parse)?.ok_or_else(|| ApiError::invalid(format!("missing query parameter {key:?}")))
}

fn parse_horizon(text: &str) -> OpResult<u8> {
    parse_hours(text).map_err(|_| ApiError::invalid(format!("horizon must be an integer in 1..=24, got {text:?}")))
}

async fn unknown_route() -> Response {
    ApiError::not_found("no such endpoint").into_response()
}

async fn countries(State(ctx): State<Arc<Context>>) -> Response {
    blocking(ctx, ops::list_countries).await
}

async fn latest_forecast(State(ctx): State<Arc<Context>>, Path(country): Path<String>, Query(params): Params) -> Response {
    blocking(ctx, move |ctx| {
        let country = parse_country(&country)?;
        let from = optional(&params, "from", parse_instant)?;
        let hours = optional(&params, "hours", parse_hours)?.unwrap_or(24);
        ops::latest_forecast(ctx, &country, from, hours)
    })
    .await
}

async fn issue_forecast(State(ctx): State<Arc<Context>>, Path(country): Path<String>, Query(params): Params) -> Response {
    blocking(ctx, move |ctx| {
        let country = parse_country(&country)?;
        let now = optional(&params, "now", parse_instant)?.unwrap_or_else(Utc::now);
        ops::issue_forecast(ctx, &country, now)
    })
    .await
}

async fn ingest(State(ctx): State<Arc<Context>>, Path(country): Path<String>, Query(params): Params, body: Bytes) -> Response {
    blocking(ctx, move |ctx| {
        let country = parse_country(&country)?;
        let source = optional(&params, "source", |s| s.parse::<SourceKind>().map_err(ApiError::from))?.unwrap_or_default();
        ops::ingest(ctx, &country, source, &body)
    })
    .await
}

async fn rebuild(State(ctx): State<Arc<Context>>, Path(country): Path<String>, Query(params): Params) -> Response {
    blocking(ctx, move |ctx| {
        let country = parse_country(&country)?;
        let deciles = optional(&params, "deciles", parse_bool)?;
        let now = optional(&params, "now", parse_instant)?.unwrap_or_else(Utc::now);
        ops::rebuild(ctx, &country, deciles, now)
    })
    .await
}

async fn quality(State(ctx): State<Arc<Context>>, Query(params): Params) -> Response {
    blocking(ctx, move |ctx| {
        let from = required(&params, "from", parse_instant)?;
        let to = required(&params, "to", parse_instant)?;
        ops::quality(ctx, from, to)
    })
    .await
}

async fn evaluate(State(ctx): State<Arc<Context>>, Path(country): Path<String>, Query(params): Params) -> Response {
    blocking(ctx, move |ctx| {
        let country = parse_country(&country)?;
        let from = optional(&params, "from", parse_instant)?;
        let to = optional(&params, "to", parse_instant)?;
        let horizon = optional(&params, "horizon", parse_horizon)?;
        ops::evaluate(ctx, &country, from, to, horizon)
    })
    .await
}

/// Serves the API on `listen` until the process receives Ctrl-C.
pub async fn serve(ctx: Context, listen: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(ctx))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
