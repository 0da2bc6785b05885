//! The HTTP surface. Handlers translate requests into pipeline calls and
//! nothing else.

use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::body::{Body, Bytes};
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use globalize_core::model::{Stage, ToneMode, TrackKind};
use globalize_core::pipeline::{ExportedFile, Pipeline, ProgressEvent, ProgressStatus};
use globalize_core::store::ArtifactId;
use globalize_core::subtitle::SubtitleFormat;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast;

use crate::error::ApiError;
use crate::state::{AppState, ProjectSlot, ProjectView};

type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    let limit = usize::try_from(state.upload_limit_bytes).unwrap_or(usize::MAX);
    Router::new()
        .route("/health", get(health))
        .route("/projects", post(create_project).get(list_projects))
        .route("/projects/{id}", get(get_project).delete(delete_project))
        .route("/projects/{id}/stages/{stage}", post(trigger_stage))
        .route("/projects/{id}/events", get(events))
        .route("/projects/{id}/tracks", get(list_tracks))
        .route("/projects/{id}/tracks/{kind}", get(download_track))
        .route("/projects/{id}/export", get(download_export))
        .route("/artifacts", post(put_artifact))
        .route("/artifacts/{id}", get(get_artifact))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

fn slot(state: &AppState, id: &str) -> Result<Arc<ProjectSlot>, ApiError> {
    state
        .project(id)
        .ok_or_else(|| ApiError::not_found(format!("project {id} does not exist")))
}

async fn health(State(state): Shared) -> Json<serde_json::Value> {
    let adapters = state.pipeline().engines().infos();
    Json(json!({ "status": "ok", "adapters": adapters }))
}

async fn create_project(
    State(state): Shared,
    mut multipart: Multipart,
) -> Result<(StatusCode, Json<ProjectView>), ApiError> {
    let mut media: Option<Bytes> = None;
    let mut source_language = None;
    let mut target_language = None;
    let mut tone = ToneMode::Formal;
    let mut multi_speaker = false;
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(format!("malformed multipart body: {e}")))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let data = field
            .bytes()
            .await
            .map_err(|e| ApiError::bad_request(format!("cannot read field {name}: {e}")))?;
        let text = || {
            String::from_utf8(data.to_vec())
                .map(|s| s.trim().to_string())
                .map_err(|_| ApiError::validation(format!("field {name} is not UTF-8")))
        };
        match name.as_str() {
            "media" => media = Some(data.clone()),
            "source_language" => source_language = Some(text()?).filter(|s| !s.is_empty()),
            "target_language" => target_language = Some(text()?).filter(|s| !s.is_empty()),
            "tone" => {
                tone = text()?.parse().map_err(|e: globalize_core::model::ModelError| {
                    ApiError::validation(e.to_string()).with_details(json!({ "field": "tone" }))
                })?
            }
            "multi_speaker" => {
                multi_speaker = match text()?.as_str() {
                    "true" | "1" | "on" => true,
                    "false" | "0" | "off" | "" => false,
                    other => {
                        return Err(ApiError::validation(format!(
                            "multi_speaker must be true or false, got {other:?}"
                        ))
                        .with_details(json!({ "field": "multi_speaker" })))
                    }
                }
            }
            _ => {}
        }
    }
    let media = media.ok_or_else(|| {
        ApiError::validation("missing media file").with_details(json!({ "field": "media" }))
    })?;
    let target_language = target_language.ok_or_else(|| {
        ApiError::validation("missing target_language")
            .with_details(json!({ "field": "target_language" }))
    })?;
    let worker = state.clone();
    let project = blocking(move || {
        Ok(worker.create_project(&media, source_language, target_language, tone, multi_speaker)?)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(ProjectView::new(project, false))))
}

async fn list_projects(State(state): Shared) -> Json<Vec<ProjectView>> {
    Json(
        state
            .project_ids()
            .iter()
            .filter_map(|id| state.project(id))
            .map(|s| state.view(&s))
            .collect(),
    )
}

async fn get_project(
    State(state): Shared,
    Path(id): Path<String>,
) -> Result<Json<ProjectView>, ApiError> {
    let slot = slot(&state, &id)?;
    Ok(Json(state.view(&slot)))
}

async fn delete_project(
    State(state): Shared,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    let slot = slot(&state, &id)?;
    if !slot.try_claim() {
        return Err(ApiError::busy(&id));
    }
    let worker = state.clone();
    blocking(move || Ok(worker.delete_project(&id)?)).await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageAccepted {
    pub project_id: String,
    pub stage: Stage,
    pub events: String,
}

async fn trigger_stage(
    State(state): Shared,
    Path((id, stage)): Path<(String, String)>,
) -> Result<(StatusCode, Json<StageAccepted>), ApiError> {
    let slot = slot(&state, &id)?;
    let stage: Stage = stage
        .parse()
        .map_err(|e: globalize_core::model::ModelError| ApiError::not_found(e.to_string()))?;
    if !slot.try_claim() {
        return Err(ApiError::busy(&id));
    }
    if let Err(e) = Pipeline::check_transition(&slot.snapshot(), stage) {
        slot.release();
        return Err(e.into());
    }
    let worker = state.clone();
    let job = slot.clone();
    tokio::task::spawn_blocking(move || worker.run_stage(&job, stage));
    Ok((
        StatusCode::ACCEPTED,
        Json(StageAccepted {
            events: format!("/projects/{id}/events"),
            project_id: id,
            stage,
        }),
    ))
}

fn sse_event(event: &ProgressEvent) -> Event {
    let name = match event.status {
        ProgressStatus::Running => "progress",
        ProgressStatus::Completed => "completed",
        ProgressStatus::Failed => "failed",
    };
    Event::default()
        .event(name)
        .json_data(event)
        .unwrap_or_else(|_| Event::default().comment("unserializable event"))
}

/// The last event (so late subscribers see where a run stands), then live
/// events. A lagging subscriber skips ahead instead of failing.
async fn events(
    State(state): Shared,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    slot(&state, &id)?;
    let (last, rx) = state.hub().subscribe(&id);
    let replay = stream::iter(last.map(|e| Ok(sse_event(&e))));
    let live = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(event) => return Some((Ok(sse_event(&event)), rx)),
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(replay.chain(live))
        .keep_alive(KeepAlive::new().interval(Duration::from_secs(15))))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackEntry {
    pub kind: TrackKind,
    pub artifact: ArtifactId,
    pub enabled: bool,
    pub produced_by: Stage,
    pub download: String,
}

async fn list_tracks(
    State(state): Shared,
    Path(id): Path<String>,
) -> Result<Json<Vec<TrackEntry>>, ApiError> {
    let project = slot(&state, &id)?.snapshot();
    Ok(Json(
        project
            .tracks
            .values()
            .map(|t| TrackEntry {
                kind: t.kind,
                artifact: t.artifact.clone(),
                enabled: t.enabled,
                produced_by: t.produced_by,
                download: format!("/projects/{id}/tracks/{}", t.kind),
            })
            .collect(),
    ))
}

#[derive(Debug, Default, Deserialize)]
struct FormatQuery {
    format: Option<String>,
    tracks: Option<String>,
}

fn subtitle_format(q: &FormatQuery) -> Result<SubtitleFormat, ApiError> {
    match q.format.as_deref() {
        None => Ok(SubtitleFormat::Srt),
        Some(f) => f.parse().map_err(|e: globalize_core::subtitle::SubtitleError| {
            ApiError::bad_request(e.to_string()).with_details(json!({ "field": "format" }))
        }),
    }
}

fn download(file: ExportedFile) -> Response {
    let disposition = format!("attachment; filename=\"{}\"", file.file_name);
    let mut response = Body::from(file.bytes).into_response();
    let headers = response.headers_mut();
    if let Ok(v) = HeaderValue::from_str(&file.content_type) {
        headers.insert(header::CONTENT_TYPE, v);
    }
    if let Ok(v) = HeaderValue::from_str(&disposition) {
        headers.insert(header::CONTENT_DISPOSITION, v);
    }
    response
}

async fn download_track(
    State(state): Shared,
    Path((id, kind)): Path<(String, String)>,
    Query(q): Query<FormatQuery>,
) -> Result<Response, ApiError> {
    let project = slot(&state, &id)?.snapshot();
    let kind: TrackKind = kind
        .parse()
        .map_err(|e: globalize_core::model::ModelError| ApiError::not_found(e.to_string()))?;
    let format = subtitle_format(&q)?;
    let file = blocking(move || Ok(state.pipeline().track_file(&project, kind, format)?)).await?;
    Ok(download(file))
}

/// No `tracks`: the dubbed video. Otherwise a comma-separated selection.
async fn download_export(
    State(state): Shared,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> Result<Response, ApiError> {
    let project = slot(&state, &id)?.snapshot();
    let format = subtitle_format(&q)?;
    let kinds = q
        .tracks
        .as_deref()
        .unwrap_or_default()
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<TrackKind>()
                .map_err(|e| ApiError::bad_request(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let file = blocking(move || {
        Ok(state
            .pipeline()
            .export_selection(&project, &kinds, format)?)
    })
    .await?;
    Ok(download(file))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArtifactRef {
    id: ArtifactId,
}

async fn put_artifact(
    State(state): Shared,
    body: Bytes,
) -> Result<(StatusCode, Json<ArtifactRef>), ApiError> {
    let id = blocking(move || Ok(state.store().put(&body)?)).await?;
    Ok((StatusCode::CREATED, Json(ArtifactRef { id })))
}

async fn get_artifact(State(state): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    let id: ArtifactId = id
        .parse()
        .map_err(|e: globalize_core::store::StoreError| ApiError::not_found(e.to_string()))?;
    let bytes = blocking(move || Ok(state.store().get(&id)?)).await?;
    let mut response = Body::from(bytes).into_response();
    response.headers_mut().insert(
        header::CONTENT_TYPE,
        HeaderValue::from_static("application/octet-stream"),
    );
    Ok(response)
}
