//! Routes:
//!
//! * `GET /ocpu/object/{name}/pb` — a stored object as a `rexp.REXP` payload.
//! * `POST /ocpu/fn/{name}/pb` — body is a `rexp.REXP` list of arguments;
//!   the response carries the function's result.
//!
//! Only the `pb` format exists; other format suffixes get 406. Error bodies
//! are plain text.

use std::io;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use dynabuf_core::rexp;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use crate::registry::{CallError, Registry};
use crate::store::ObjectStore;

pub const PROTOBUF_CONTENT_TYPE: &str = "application/x-protobuf";

const BODY_LIMIT: usize = 64 * 1024 * 1024;

/// Shared, read-only service state.
#[derive(Clone, Default)]
pub struct AppState {
    pub registry: Registry,
    pub store: ObjectStore,
}

impl AppState {
    pub fn builtin() -> Self {
        AppState {
            registry: Registry::builtin(),
            store: ObjectStore::builtin(),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/ocpu/object/{name}/{format}", get(get_object))
        .route("/ocpu/fn/{name}/{format}", post(call_function))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(Arc::new(state))
}

fn text(status: StatusCode, message: impl Into<String>) -> Response {
    let mut body = message.into();
    body.push('\n');
    (status, [(header::CONTENT_TYPE, "text/plain; charset=utf-8")], body).into_response()
}

fn protobuf(bytes: Vec<u8>) -> Response {
    (StatusCode::OK, [(header::CONTENT_TYPE, PROTOBUF_CONTENT_TYPE)], bytes).into_response()
}

#[allow(clippy::result_large_err)]
fn check_format(format: &str) -> Result<(), Response> {
    if format == "pb" {
        Ok(())
    } else {
        Err(text(StatusCode::NOT_ACCEPTABLE, format!("format `{format}` is not available; use /pb")))
    }
}

async fn get_object(State(state): State<Arc<AppState>>, Path((name, format)): Path<(String, String)>) -> Response {
    let Some(value) = state.store.get(&name) else {
        return text(StatusCode::NOT_FOUND, format!("no object named `{name}`"));
    };
    if let Err(r) = check_format(&format) {
        return r;
    }
    protobuf(rexp::serialize_value(value).bytes)
}

fn is_protobuf(headers: &HeaderMap) -> bool {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.split(';').next())
        .is_some_and(|essence| essence.trim().eq_ignore_ascii_case(PROTOBUF_CONTENT_TYPE))
}

async fn call_function(
    State(state): State<Arc<AppState>>,
    Path((name, format)): Path<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    if !state.registry.contains(&name) {
        return text(StatusCode::NOT_FOUND, format!("no function named `{name}`"));
    }
    if let Err(r) = check_format(&format) {
        return r;
    }
    if !is_protobuf(&headers) {
        return text(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            format!("request body must be {PROTOBUF_CONTENT_TYPE}"),
        );
    }
    let args = match rexp::unserialize_value(&body) {
        Ok(v) => v,
        Err(e) => return text(StatusCode::BAD_REQUEST, format!("cannot read arguments: {e}")),
    };
    // Large inputs make calls CPU-bound; keep them off the async workers.
    let result = tokio::task::spawn_blocking(move || state.registry.call(&name, &args)).await;
    match result {
        Ok(Ok(value)) => protobuf(rexp::serialize_value(&value).bytes),
        Ok(Err(CallError::UnknownFunction(n))) => text(StatusCode::NOT_FOUND, format!("no function named `{n}`")),
        Ok(Err(CallError::BadArguments(m))) => text(StatusCode::BAD_REQUEST, m),
        Ok(Err(CallError::Failed(m))) => text(StatusCode::INTERNAL_SERVER_ERROR, m),
        Err(e) => text(StatusCode::INTERNAL_SERVER_ERROR, format!("function panicked: {e}")),
    }
}

/// A running server; dropping it without [`ServerHandle::shutdown`] leaves
/// the server running in the background.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<io::Result<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub async fn shutdown(mut self) -> io::Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        self.task.await.map_err(io::Error::other)?
    }
}

/// Binds `addr` and serves [`router`] on the current tokio runtime.
pub async fn serve(addr: SocketAddr, state: AppState) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let (stop, stopped) = oneshot::channel::<()>();
    let app = router(state);
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = stopped.await;
            })
            .await
    });
    Ok(ServerHandle {
        addr,
        stop: Some(stop),
        task,
    })
}
