//! Stateless HTTP/JSON front end for the solver.
//!
//! Angles travel in degrees; everything inside is radians. Configurations
//! are sent in full (radian fields included) so clients can re-validate
//! them, with the base angles repeated in degrees.

pub mod api;

use std::net::SocketAddr;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use tower_http::cors::{Any, CorsLayer};

pub use api::{ApiError, BoundsQuery, FkRequest, SolveRequest, SweepRequest};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Largest accepted sample count along either sweep axis.
    pub sweep_cap: usize,
    /// Origin allowed by CORS; `None` allows any origin.
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            sweep_cap: 250,
            cors_origin: None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::BadRequest { .. } => StatusCode::BAD_REQUEST,
            ApiError::TooLarge(_) => StatusCode::PAYLOAD_TOO_LARGE,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(self.body())).into_response()
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest {
        field: None,
        message: e.to_string(),
    })
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn solve(body: Bytes) -> Result<Response, ApiError> {
    let req: SolveRequest = parse(&body)?;
    let res = blocking(move || api::solve(&req)).await?;
    Ok(Json(res).into_response())
}

async fn sweep(State(config): State<ServiceConfig>, body: Bytes) -> Result<Response, ApiError> {
    let req: SweepRequest = parse(&body)?;
    let res = blocking(move || api::sweep(&req, config.sweep_cap)).await?;
    Ok(Json(res).into_response())
}

async fn fk(body: Bytes) -> Result<Response, ApiError> {
    let req: FkRequest = parse(&body)?;
    let res = blocking(move || api::fk(&req)).await?;
    Ok(Json(res).into_response())
}

async fn bounds(
    query: Result<Query<BoundsQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::BadRequest {
        field: None,
        message: e.body_text(),
    })?;
    Ok(Json(api::bounds(&q)?).into_response())
}

pub fn router(config: ServiceConfig) -> Router {
    let cors = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([axum::http::header::CONTENT_TYPE]);
    let cors = match config.cors_origin.as_deref().map(HeaderValue::from_str) {
        Some(Ok(origin)) => cors.allow_origin(origin),
        _ => cors.allow_origin(Any),
    };
    Router::new()
        .route("/api/solve", post(solve))
        .route("/api/sweep", post(sweep))
        .route("/api/fk", post(fk))
        .route("/api/bounds", get(bounds))
        .layer(cors)
        .with_state(config)
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(config)).await
}
