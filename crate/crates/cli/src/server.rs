//! Read-only HTTP service feeding the trace explorer.
//!
//! The full trace never changes. A projection request builds a new
//! snapshot and swaps it in whole, so handlers only ever read immutable
//! data.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use vartrace_core::export::to_json;
use vartrace_core::minilang::Program;
use vartrace_core::projection::{project, ProjectionError};
use vartrace_core::tracegraph::VariationalTrace;

struct Snapshot {
    focus: Vec<String>,
    json: Arc<String>,
}

pub struct AppState {
    program: Program,
    full: VariationalTrace,
    current: RwLock<Arc<Snapshot>>,
}

impl AppState {
    /// Serves the projection of `full` on `focus`, or `full` itself when
    /// no focus is given.
    pub fn new(
        program: Program,
        full: VariationalTrace,
        focus: Option<Vec<String>>,
    ) -> Result<Arc<Self>, ProjectionError> {
        let (focus, json) = match focus {
            Some(f) => {
                let t = project(&full, &f)?;
                (f, to_json(&t))
            }
            None => (full.options().names().to_vec(), to_json(&full)),
        };
        let current = Snapshot {
            focus,
            json: Arc::new(json),
        };
        Ok(Arc::new(AppState {
            program,
            full,
            current: RwLock::new(Arc::new(current)),
        }))
    }

    fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.current.read().expect("snapshot lock"))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/api/trace", get(trace))
        .route("/api/options", get(options))
        .route("/api/project", post(project_focus))
        .route("/api/source", get(source))
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    axum::serve(listener, router(state)).await
}

fn json_text(body: &str) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body.to_string()).into_response()
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

fn error(status: StatusCode, message: String) -> Response {
    (status, Json(ErrorBody { error: message })).into_response()
}

async fn index() -> Html<&'static str> {
    Html(
        "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>vartrace</title></head>\n\
         <body><h1>vartrace</h1><p>The explorer UI is not bundled with this build. \
         The API is available at <code>/api/trace</code>, <code>/api/options</code>, \
         <code>/api/project</code> and <code>/api/source?file=NAME</code>.</p></body></html>\n",
    )
}

async fn trace(State(state): State<Arc<AppState>>) -> Response {
    json_text(&state.snapshot().json)
}

#[derive(Serialize)]
struct OptionsBody<'a> {
    options: &'a [String],
    focus: &'a [String],
}

async fn options(State(state): State<Arc<AppState>>) -> Response {
    let snap = state.snapshot();
    Json(OptionsBody {
        options: state.full.options().names(),
        focus: &snap.focus,
    })
    .into_response()
}

#[derive(Deserialize)]
struct ProjectBody {
    focus: Vec<String>,
}

async fn project_focus(State(state): State<Arc<AppState>>, Json(body): Json<ProjectBody>) -> Response {
    match project(&state.full, &body.focus) {
        Ok(t) => {
            let snap = Arc::new(Snapshot {
                focus: body.focus,
                json: Arc::new(to_json(&t)),
            });
            *state.current.write().expect("snapshot lock") = Arc::clone(&snap);
            json_text(&snap.json)
        }
        Err(e) => error(StatusCode::BAD_REQUEST, e.to_string()),
    }
}

#[derive(Serialize)]
struct SourceBody<'a> {
    file: &'a str,
    lines: Vec<&'a str>,
}

async fn source(State(state): State<Arc<AppState>>, Query(q): Query<HashMap<String, String>>) -> Response {
    let Some(file) = q.get("file") else {
        return error(StatusCode::BAD_REQUEST, "missing `file` parameter".into());
    };
    if file.as_str() != &*state.program.file {
        return error(StatusCode::NOT_FOUND, format!("unknown file `{file}`"));
    }
    Json(SourceBody {
        file: &state.program.file,
        lines: state.program.source_lines(),
    })
    .into_response()
}
