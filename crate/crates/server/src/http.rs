//! Request/poll fallback. Every response that can carry seat messages
//! drains that seat's outbox, so a client loops on `GET .../messages`.

use std::collections::BTreeMap;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use canteen_core::session::{
    ClientMessage, ErrorCode, Occupant, Phase, ProtocolError, ServerMessage, SessionId, Snapshot,
};
use canteen_core::sim::{Policy, SessionConfig};
use serde::{Deserialize, Serialize};

use crate::AppState;

struct ApiError(ProtocolError);

impl From<ProtocolError> for ApiError {
    fn from(e: ProtocolError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0.code {
            ErrorCode::UnknownSession => StatusCode::NOT_FOUND,
            ErrorCode::BadToken => StatusCode::FORBIDDEN,
            ErrorCode::WrongPhase
            | ErrorCode::DuplicateSubmission
            | ErrorCode::SeatTaken
            | ErrorCode::TooLate => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        (status, Json(self.0.to_message())).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// `Json` whose rejections use the protocol's error shape.
struct Body<T>(T);

impl<S, T> FromRequest<S> for Body<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(ProtocolError::new(ErrorCode::InvalidMessage, e.body_text()).into()),
        }
    }
}

/// Body of `POST /sessions`. Bot seats are keyed by seat number and use the
/// policy grammar, e.g. `{"bots": {"1": "before9"}}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CreateSession {
    #[serde(default)]
    pub config: Option<SessionConfig>,
    #[serde(default)]
    pub bots: BTreeMap<u8, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Created {
    session: SessionId,
}

#[derive(Debug, Serialize, Deserialize)]
struct JoinRequest {
    token: String,
}

/// Body of `POST /sessions/{id}/seats/{seat}/messages`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SendRequest {
    pub token: String,
    pub message: ClientMessage,
}

#[derive(Debug, Deserialize)]
struct TokenQuery {
    token: String,
}

#[derive(Debug, Serialize)]
struct Messages {
    messages: Vec<ServerMessage>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(snapshot))
        .route("/sessions/{id}/log", get(export_log))
        .route("/sessions/{id}/seats/{seat}/join", post(join))
        .route("/sessions/{id}/seats/{seat}/messages", post(send).get(poll))
        .with_state(state)
}

fn session_id(raw: &str) -> ApiResult<SessionId> {
    Ok(raw.parse()?)
}

async fn create(
    State(st): State<AppState>,
    Body(req): Body<CreateSession>,
) -> ApiResult<impl IntoResponse> {
    let invalid = |m: String| ProtocolError::new(ErrorCode::InvalidConfig, m);
    let mut bots = Vec::new();
    for (seat, text) in &req.bots {
        let policy: Policy = text
            .parse()
            .map_err(|e| invalid(format!("seat {seat}: {e}")))?;
        bots.push((*seat, policy));
    }
    let id = st.service.create_session(req.config.unwrap_or_default())?;
    let now = st.now();
    for (seat, policy) in bots {
        if let Err(e) = st.service.join(id, seat, Occupant::Bot(policy), now) {
            let _ = st.service.remove(id);
            return Err(e.into());
        }
    }
    Ok((StatusCode::CREATED, Json(Created { session: id })))
}

async fn list(State(st): State<AppState>) -> Json<Vec<Snapshot>> {
    Json(
        st.service
            .ids()
            .into_iter()
            .filter_map(|id| st.service.snapshot(id).ok())
            .collect(),
    )
}

async fn snapshot(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Snapshot>> {
    let id = session_id(&id)?;
    st.service.advance(id, st.now())?;
    Ok(Json(st.service.snapshot(id)?))
}

/// The log shows both seats' certainty, so it is only released once the
/// game is over.
async fn export_log(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let id = session_id(&id)?;
    if st.service.advance(id, st.now())? != Phase::Finished {
        return Err(ProtocolError::new(
            ErrorCode::WrongPhase,
            "log is available after the game ends",
        )
        .into());
    }
    let body = st.service.export_log(id)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

fn drain(st: &AppState, id: SessionId, seat: u8, token: &str) -> ApiResult<Json<Messages>> {
    st.service.advance(id, st.now())?;
    Ok(Json(Messages {
        messages: st.service.take_messages_for(id, seat, token)?,
    }))
}

async fn join(
    State(st): State<AppState>,
    Path((id, seat)): Path<(String, u8)>,
    Body(req): Body<JoinRequest>,
) -> ApiResult<Json<Messages>> {
    let id = session_id(&id)?;
    st.service
        .join(id, seat, Occupant::human(req.token.clone()), st.now())?;
    drain(&st, id, seat, &req.token)
}

async fn send(
    State(st): State<AppState>,
    Path((id, seat)): Path<(String, u8)>,
    Body(req): Body<SendRequest>,
) -> ApiResult<Json<Messages>> {
    let id = session_id(&id)?;
    st.service
        .handle(id, seat, &req.token, req.message, st.now())?;
    drain(&st, id, seat, &req.token)
}

async fn poll(
    State(st): State<AppState>,
    Path((id, seat)): Path<(String, u8)>,
    Query(q): Query<TokenQuery>,
) -> ApiResult<Json<Messages>> {
    let id = session_id(&id)?;
    drain(&st, id, seat, &q.token)
}
