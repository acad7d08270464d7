// SPDX-License-Identifier: Apache-2.0

//! HTTP front end for the session store.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use graspforge_core::planner::PluginRegistry;
use graspforge_core::service::{ErrorClass, PlanRequest, ServiceConfig, ServiceError, SessionStore};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::args::ServeArgs;
use crate::inputs::load_config;
use crate::{CliError, Exit};

/// Request bodies may carry point clouds of up to 5e6 points.
pub const BODY_LIMIT: usize = 512 * 1024 * 1024;

type Store = Arc<SessionStore>;

fn status(class: ErrorClass) -> StatusCode {
    match class {
        ErrorClass::NotFound => StatusCode::NOT_FOUND,
        ErrorClass::Invalid => StatusCode::BAD_REQUEST,
        ErrorClass::Conflict => StatusCode::CONFLICT,
        ErrorClass::Internal => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn error_response(e: &ServiceError) -> Response {
    (status(e.class()), Json(e.body())).into_response()
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, Response> {
    let text = std::str::from_utf8(body).map_err(|e| error_response(&ServiceError::BadRequest(e.to_string())))?;
    graspforge_core::from_json(text).map_err(|m| error_response(&ServiceError::BadRequest(m)))
}

/// Runs `f` off the async workers and renders its result.
async fn blocking<T, F>(ok: StatusCode, f: F) -> Response
where
    T: Serialize + Send + 'static,
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(Ok(v)) => (ok, Json(v)).into_response(),
        Ok(Err(e)) => error_response(&e),
        Err(e) => (
            StatusCode::INTERNAL_SERVER_ERROR,
            Json(json!({"error": "internal", "message": e.to_string()})),
        )
            .into_response(),
    }
}

async fn create_session(State(store): State<Store>, body: Bytes) -> Response {
    match parse(&body) {
        Ok(req) => blocking(StatusCode::CREATED, move || store.create_session(&req)).await,
        Err(r) => r,
    }
}

async fn session_info(State(store): State<Store>, Path(id): Path<String>) -> Response {
    blocking(StatusCode::OK, move || store.session_info(&id)).await
}

async fn scene(State(store): State<Store>, Path(id): Path<String>) -> Response {
    blocking(StatusCode::OK, move || store.get_scene(&id)).await
}

async fn plan(State(store): State<Store>, Path(id): Path<String>, body: Bytes) -> Response {
    let req = if body.iter().all(u8::is_ascii_whitespace) {
        PlanRequest::default()
    } else {
        match parse(&body) {
            Ok(req) => req,
            Err(r) => return r,
        }
    };
    blocking(StatusCode::OK, move || store.get_grasps(&id, &req)).await
}

async fn grasps(State(store): State<Store>, Path(id): Path<String>) -> Response {
    blocking(StatusCode::OK, move || store.grasps(&id)).await
}

async fn progress(State(store): State<Store>, Path(id): Path<String>) -> Response {
    blocking(StatusCode::OK, move || store.progress(&id)).await
}

macro_rules! mutation {
    ($name:ident, $method:ident) => {
        async fn $name(State(store): State<Store>, Path(id): Path<String>, body: Bytes) -> Response {
            match parse(&body) {
                Ok(req) => blocking(StatusCode::OK, move || store.$method(&id, &req)).await,
                Err(r) => r,
            }
        }
    };
}

mutation!(select, select_grasp);
mutation!(object, update_object);
mutation!(roi, apply_roi);
mutation!(steps, update_steps);

async fn no_ui() -> Response {
    (
        StatusCode::NOT_FOUND,
        Json(json!({"error": "no_ui", "message": "no UI assets configured; start with --ui-dir"})),
    )
        .into_response()
}

pub fn router(store: Store, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/health", get(|| async { Json(json!({"status": "ok"})) }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_info))
        .route("/sessions/{id}/scene", get(scene))
        .route("/sessions/{id}/grasps", post(plan).get(grasps))
        .route("/sessions/{id}/progress", get(progress))
        .route("/sessions/{id}/select", post(select))
        .route("/sessions/{id}/object", post(object))
        .route("/sessions/{id}/roi", post(roi))
        .route("/sessions/{id}/steps", post(steps))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(store);
    match ui_dir {
        Some(dir) => api.nest_service("/ui", ServeDir::new(dir)),
        None => api.route("/ui", get(no_ui)).route("/ui/{*path}", get(no_ui)),
    }
}

pub fn build_store(args: &ServeArgs) -> Result<SessionStore, CliError> {
    let planner = load_config(args.config.as_deref(), args.cache_dir.as_deref())?;
    let config = ServiceConfig {
        planner,
        jobs: usize::from(args.jobs),
        seed: args.seed,
    };
    SessionStore::new(config, PluginRegistry::with_builtins()).map_err(|e| match e {
        ServiceError::Planner(p) => CliError::from_planner(p),
        other => CliError::Server(other.to_string()),
    })
}

pub fn cmd_serve(args: &ServeArgs) -> Result<Exit, CliError> {
    let store = Arc::new(build_store(args)?);
    let app = router(store, args.ui_dir.clone());
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Server(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(SocketAddr::new(args.host, args.port))
            .await
            .map_err(|e| CliError::Server(format!("cannot bind {}:{}: {e}", args.host, args.port)))?;
        let addr = listener.local_addr().map_err(|e| CliError::Server(e.to_string()))?;
        println!("listening on http://{addr}");
        use std::io::Write as _;
        let _ = std::io::stdout().flush();
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Server(e.to_string()))
    })?;
    Ok(Exit::Success)
}
