//! JSON-over-HTTP front end.

use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, FromRequestParts, Path, Query, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use idpfilter::match_engine::MatchStrategy;
use idpfilter::policy::{AppId, FilterScheme, ListKind, PolicyList, UserId};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::service::{Service, ServiceError};

type Shared = Arc<Service>;

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match &self.0 {
            ServiceError::UsernameTaken(_) => StatusCode::CONFLICT,
            ServiceError::WeakPassword | ServiceError::InvalidTerm(_) | ServiceError::Validation(_) => {
                StatusCode::BAD_REQUEST
            }
            ServiceError::InvalidCredentials | ServiceError::InvalidSession | ServiceError::UnknownApiKey => {
                StatusCode::UNAUTHORIZED
            }
            ServiceError::UnknownApp(_) | ServiceError::UnknownUser(_) => StatusCode::NOT_FOUND,
            ServiceError::PermissionNotGranted { .. } => StatusCode::FORBIDDEN,
            ServiceError::TextTooLarge { .. } => StatusCode::PAYLOAD_TOO_LARGE,
            ServiceError::Store(_) | ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %self.0, "request failed");
        }
        let detail = match &self.0 {
            ServiceError::Store(_) | ServiceError::Internal(_) => "internal error".to_owned(),
            e => e.to_string(),
        };
        (status, Json(json!({ "error": self.0.code(), "detail": detail }))).into_response()
    }
}

fn validation(msg: impl Into<String>) -> ApiError {
    ApiError(ServiceError::Validation(msg.into()))
}

/// JSON body extractor that reports malformed bodies in the service's error shape.
pub struct Body<T>(pub T);

impl<S, T> axum::extract::FromRequest<S> for Body<T>
where
    T: serde::de::DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: axum::extract::Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(validation(e.body_text())),
        }
    }
}

async fn blocking<T, F>(svc: &Shared, f: F) -> Result<T, ApiError>
where
    F: FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    let svc = svc.clone();
    match tokio::task::spawn_blocking(move || f(&svc)).await {
        Ok(r) => r.map_err(ApiError),
        Err(e) => {
            tracing::error!(error = %e, "blocking task failed");
            Err(ApiError(ServiceError::Internal("worker task failed".into())))
        }
    }
}

/// The user behind a `Authorization: Bearer <token>` header.
pub struct Caller(pub UserId);

impl FromRequestParts<Shared> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, svc: &Shared) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or(ApiError(ServiceError::InvalidSession))?;
        Ok(Caller(svc.authenticate(token.trim())?))
    }
}

/// The raw `X-Api-Key` header.
pub struct ApiKey(pub String);

impl FromRequestParts<Shared> for ApiKey {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &Shared) -> Result<Self, Self::Rejection> {
        parts
            .headers
            .get("x-api-key")
            .and_then(|v| v.to_str().ok())
            .map(|v| ApiKey(v.to_owned()))
            .ok_or(ApiError(ServiceError::UnknownApiKey))
    }
}

#[derive(Deserialize)]
struct Credentials {
    username: String,
    password: String,
}

#[derive(Deserialize)]
struct NewApp {
    name: String,
    #[serde(default)]
    strategy: Option<MatchStrategy>,
}

#[derive(Deserialize)]
struct GrantBody {
    app_id: AppId,
    allow_filtering: bool,
    allow_others_to_share_me: bool,
}

#[derive(Deserialize)]
struct TermBody {
    app_id: AppId,
    term: String,
}

#[derive(Deserialize)]
struct AppQuery {
    app_id: AppId,
}

#[derive(Deserialize)]
struct ReportsQuery {
    app_id: Option<AppId>,
    since: Option<DateTime<Utc>>,
}

#[derive(Deserialize)]
struct FilterBody {
    sender: UserId,
    text: String,
    #[serde(default)]
    scheme: FilterScheme,
}

#[derive(Serialize)]
struct CategoryInfo {
    id: idpfilter::vocab::CategoryId,
    terms: usize,
}

fn parse_kind(kind: &str) -> Result<ListKind, ApiError> {
    kind.parse().map_err(|e: idpfilter::policy::UnknownListKind| validation(e.to_string()))
}

async fn create_user(State(svc): State<Shared>, Body(c): Body<Credentials>) -> Result<impl IntoResponse, ApiError> {
    let id = blocking(&svc, move |s| s.register_user(&c.username, &c.password)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "user_id": id }))))
}

async fn create_session(State(svc): State<Shared>, Body(c): Body<Credentials>) -> Result<impl IntoResponse, ApiError> {
    let session = blocking(&svc, move |s| s.login(&c.username, &c.password)).await?;
    Ok((StatusCode::CREATED, Json(session)))
}

async fn create_app(State(svc): State<Shared>, Body(a): Body<NewApp>) -> Result<impl IntoResponse, ApiError> {
    let reg = blocking(&svc, move |s| s.register_app(&a.name, a.strategy)).await?;
    Ok((StatusCode::CREATED, Json(reg)))
}

async fn create_grant(
    State(svc): State<Shared>,
    Caller(user): Caller,
    Body(g): Body<GrantBody>,
) -> Result<impl IntoResponse, ApiError> {
    let grant =
        blocking(&svc, move |s| s.grant_permission(&user, &g.app_id, g.allow_filtering, g.allow_others_to_share_me))
            .await?;
    Ok(Json(grant))
}

async fn put_term(
    State(svc): State<Shared>,
    Caller(user): Caller,
    Path(kind): Path<String>,
    Body(t): Body<TermBody>,
) -> Result<Json<PolicyList>, ApiError> {
    let kind = parse_kind(&kind)?;
    Ok(Json(blocking(&svc, move |s| s.upsert_term(&user, &t.app_id, kind, &t.term)).await?))
}

async fn delete_term(
    State(svc): State<Shared>,
    Caller(user): Caller,
    Path(kind): Path<String>,
    Body(t): Body<TermBody>,
) -> Result<Json<PolicyList>, ApiError> {
    let kind = parse_kind(&kind)?;
    Ok(Json(blocking(&svc, move |s| s.remove_term(&user, &t.app_id, kind, &t.term)).await?))
}

async fn get_terms(
    State(svc): State<Shared>,
    Caller(user): Caller,
    Path(kind): Path<String>,
    Query(q): Query<AppQuery>,
) -> Result<Json<PolicyList>, ApiError> {
    let kind = parse_kind(&kind)?;
    Ok(Json(svc.list(&user, &q.app_id, kind)?))
}

async fn get_lists(
    State(svc): State<Shared>,
    Caller(user): Caller,
    Query(q): Query<AppQuery>,
) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(svc.lists(&user, &q.app_id)?))
}

async fn get_categories(State(svc): State<Shared>) -> Json<Vec<CategoryInfo>> {
    Json(svc.categories().into_iter().map(|(id, terms)| CategoryInfo { id, terms }).collect())
}

async fn post_filter(
    State(svc): State<Shared>,
    ApiKey(key): ApiKey,
    Body(f): Body<FilterBody>,
) -> Result<impl IntoResponse, ApiError> {
    let result = blocking(&svc, move |s| s.filter(&key, &f.sender, &f.text, &f.scheme)).await?;
    Ok(Json(result))
}

async fn get_reports(
    State(svc): State<Shared>,
    Caller(user): Caller,
    Query(q): Query<ReportsQuery>,
) -> Result<impl IntoResponse, ApiError> {
    let view = blocking(&svc, move |s| s.reports(&user, q.app_id.as_ref(), q.since)).await?;
    Ok(Json(view))
}

pub fn router(svc: Shared) -> Router {
    // Leave room above the text limit so oversized text reaches the explicit
    // check and gets a JSON error instead of a bare 413.
    let body_limit = svc.config().max_text_bytes.saturating_mul(4).saturating_add(64 * 1024);
    Router::new()
        .route("/users", post(create_user))
        .route("/sessions", post(create_session))
        .route("/apps", post(create_app))
        .route("/grants", post(create_grant))
        .route("/lists", get(get_lists))
        .route("/lists/{kind}/terms", put(put_term).delete(delete_term).get(get_terms))
        .route("/categories", get(get_categories))
        .route("/filter", post(post_filter))
        .route("/reports", get(get_reports))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(svc)
}
