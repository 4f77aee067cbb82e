//! Mock online-social-network web service.
//!
//! Endpoints:
//!
//! * `POST /login` with form fields `username` and `password` sets the
//!   `osn_session` cookie. The session acts as the credential's seed user.
//! * `GET /friends?id=X&filter=afp` returns `{"id", "friends", "truncated"}`
//!   with the lowest-ID `friend_cap` neighbors of `X`. Without `id` it
//!   returns the session user's own list.
//! * `GET /healthz` answers 200.
//!
//! Status codes: 400 bad request, 401 no or unknown session or bad
//! credentials, 403 private profile outside the requester's friendships,
//! 404 unassigned ID, 429 with `Retry-After` (whole seconds) once the
//! per-session token bucket is empty.

mod ratelimit;

use std::collections::HashMap;
use std::io;
use std::net::{SocketAddr, TcpListener};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Instant, SystemTime};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use log::{debug, info};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::oneshot;

pub use ratelimit::{RateDecision, TokenBucket};

use crate::graph::NodeId;
use crate::world::SyntheticWorld;

pub const SESSION_COOKIE: &str = "osn_session";
pub const DEFAULT_FRIEND_CAP: usize = 400;
/// Friend cap meaning "return complete lists".
pub const UNCAPPED: usize = usize::MAX;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid service config: {0}")]
    Config(String),
    #[error("service I/O: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Credential {
    pub username: String,
    pub password: String,
    pub seed_node: NodeId,
}

impl Credential {
    pub fn new(username: &str, password: &str, seed_node: NodeId) -> Self {
        Credential { username: username.into(), password: password.into(), seed_node }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub listen_address: String,
    pub friend_cap: usize,
    /// Requests per second per session; 0 disables limiting.
    pub rate_limit: f64,
    pub credentials: Vec<Credential>,
}

impl ServiceConfig {
    pub fn new(credentials: Vec<Credential>) -> Self {
        ServiceConfig {
            listen_address: "127.0.0.1:0".into(),
            friend_cap: DEFAULT_FRIEND_CAP,
            rate_limit: 0.0,
            credentials,
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.friend_cap == 0 {
            return Err(ServiceError::Config("friend_cap must be at least 1".into()));
        }
        if !(self.rate_limit >= 0.0) || !self.rate_limit.is_finite() {
            return Err(ServiceError::Config(format!("rate_limit must be >= 0, got {}", self.rate_limit)));
        }
        if self.credentials.is_empty() {
            return Err(ServiceError::Config("at least one credential is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FriendList {
    pub id: NodeId,
    pub friends: Vec<NodeId>,
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub token: String,
    pub user_node: NodeId,
    pub created_at: SystemTime,
}

struct SessionState {
    session: Session,
    bucket: TokenBucket,
}

struct ServiceState {
    world: Arc<SyntheticWorld>,
    cfg: ServiceConfig,
    sessions: Mutex<HashMap<String, SessionState>>,
    epoch: Instant,
}

/// Outcome of a friend-list request against the world, before HTTP framing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Access {
    Granted(FriendList),
    NotFound,
    Forbidden,
}

/// Access decision for `requester` asking for `target`'s friend list.
pub fn friend_list(world: &SyntheticWorld, requester: NodeId, target: NodeId, cap: usize) -> Access {
    let g = world.graph();
    let Some(ix) = g.index_of(target) else {
        return Access::NotFound;
    };
    if world.is_private_index(ix) && target != requester && !g.has_edge(target, requester) {
        return Access::Forbidden;
    }
    let degree = g.degree(ix);
    let friends: Vec<NodeId> = g.neighbor_ids(ix).take(cap).collect();
    Access::Granted(FriendList { id: target, friends, truncated: degree > cap })
}

fn new_token() -> String {
    format!("{:032x}", rand::random::<u128>())
}

fn session_token(headers: &HeaderMap) -> Option<String> {
    for value in headers.get_all(header::COOKIE) {
        let Ok(s) = value.to_str() else { continue };
        for part in s.split(';') {
            if let Some((k, v)) = part.trim().split_once('=') {
                if k == SESSION_COOKIE {
                    return Some(v.to_string());
                }
            }
        }
    }
    None
}

async fn login(State(st): State<Arc<ServiceState>>, body: Bytes) -> Response {
    let mut username = None;
    let mut password = None;
    for (k, v) in form_urlencoded::parse(&body) {
        match k.as_ref() {
            "username" => username = Some(v.into_owned()),
            "password" => password = Some(v.into_owned()),
            _ => {}
        }
    }
    let (Some(username), Some(password)) = (username, password) else {
        return (StatusCode::BAD_REQUEST, "username and password are required\n").into_response();
    };
    let Some(cred) = st.cfg.credentials.iter().find(|c| c.username == username && c.password == password) else {
        return (StatusCode::UNAUTHORIZED, "bad credentials\n").into_response();
    };
    let token = new_token();
    let now = st.epoch.elapsed().as_secs_f64();
    let session = Session { token: token.clone(), user_node: cred.seed_node, created_at: SystemTime::now() };
    st.sessions
        .lock()
        .expect("session table poisoned")
        .insert(token.clone(), SessionState { session, bucket: TokenBucket::new(st.cfg.rate_limit, now) });
    debug!("login {username} -> node {}", cred.seed_node);
    let cookie = format!("{SESSION_COOKIE}={token}; Path=/; HttpOnly");
    let mut resp = (StatusCode::OK, Json(serde_json::json!({ "id": cred.seed_node }))).into_response();
    resp.headers_mut().insert(header::SET_COOKIE, HeaderValue::from_str(&cookie).expect("ascii cookie"));
    resp
}

async fn friends(
    State(st): State<Arc<ServiceState>>,
    headers: HeaderMap,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let Some(token) = session_token(&headers) else {
        return (StatusCode::UNAUTHORIZED, "login required\n").into_response();
    };
    let requester = {
        let mut sessions = st.sessions.lock().expect("session table poisoned");
        let Some(state) = sessions.get_mut(&token) else {
            return (StatusCode::UNAUTHORIZED, "unknown session\n").into_response();
        };
        let now = st.epoch.elapsed().as_secs_f64();
        if let RateDecision::RetryAfter(secs) = state.bucket.check(now) {
            let wait = secs.ceil().max(1.0) as u64;
            let mut resp = (StatusCode::TOO_MANY_REQUESTS, "slow down\n").into_response();
            resp.headers_mut().insert(header::RETRY_AFTER, HeaderValue::from(wait));
            return resp;
        }
        state.session.user_node
    };
    if let Some(f) = params.get("filter") {
        if f != "afp" {
            return (StatusCode::BAD_REQUEST, "unsupported filter\n").into_response();
        }
    }
    let target = match params.get("id") {
        None => requester,
        Some(raw) => match raw.parse::<NodeId>() {
            Ok(id) => id,
            Err(_) => return (StatusCode::BAD_REQUEST, "id must be a decimal integer\n").into_response(),
        },
    };
    match friend_list(&st.world, requester, target, st.cfg.friend_cap) {
        Access::Granted(list) => (StatusCode::OK, Json(list)).into_response(),
        Access::NotFound => (StatusCode::NOT_FOUND, "no such user\n").into_response(),
        Access::Forbidden => (StatusCode::FORBIDDEN, "friend list is private\n").into_response(),
    }
}

fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/login", post(login))
        .route("/friends", get(friends))
        .route("/healthz", get(|| async { "ok\n" }))
        .with_state(state)
}

/// A running service on a background thread. Dropping it shuts it down.
pub struct ServiceHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL, e.g. `http://127.0.0.1:8080`.
    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(mut self) -> io::Result<()> {
        self.stop()
    }

    fn stop(&mut self) -> io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(io::Error::other("service thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        let _ = self.stop();
    }
}

fn build_state(world: Arc<SyntheticWorld>, cfg: ServiceConfig) -> Arc<ServiceState> {
    Arc::new(ServiceState { world, cfg, sessions: Mutex::new(HashMap::new()), epoch: Instant::now() })
}

fn runtime() -> io::Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build()
}

/// Binds `cfg.listen_address` and serves on a background thread.
pub fn spawn(world: Arc<SyntheticWorld>, cfg: ServiceConfig) -> Result<ServiceHandle, ServiceError> {
    cfg.validate()?;
    let listener = TcpListener::bind(&cfg.listen_address)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let state = build_state(world, cfg);
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new().name("osn-service".into()).spawn(move || {
        let rt = runtime()?;
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener)?;
            axum::serve(listener, router(state))
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
        })
    })?;
    info!("service listening on {addr}");
    Ok(ServiceHandle { addr, shutdown: Some(tx), thread: Some(thread) })
}

/// Serves in the foreground until Ctrl-C.
pub fn serve_blocking(world: Arc<SyntheticWorld>, cfg: ServiceConfig) -> Result<(), ServiceError> {
    cfg.validate()?;
    let state = build_state(world, cfg.clone());
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&cfg.listen_address).await?;
        info!("service listening on {}", listener.local_addr()?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SocialGraph;

    #[test]
    fn session_cookie_parsing() {
        let mut h = HeaderMap::new();
        h.insert(header::COOKIE, HeaderValue::from_static("a=1; osn_session=abc; b=2"));
        assert_eq!(session_token(&h).as_deref(), Some("abc"));
        assert_eq!(session_token(&HeaderMap::new()), None);
    }

    #[test]
    fn tokens_are_distinct_and_wide() {
        let a = new_token();
        assert_eq!(a.len(), 32);
        assert_ne!(a, new_token());
    }

    #[test]
    fn config_validation() {
        let mut c = ServiceConfig::new(vec![Credential::new("u", "p", 1)]);
        assert!(c.validate().is_ok());
        c.friend_cap = 0;
        assert!(c.validate().is_err());
        assert!(ServiceConfig::new(vec![]).validate().is_err());
    }

    #[test]
    fn access_rules() {
        let w = SyntheticWorld::from_graph(SocialGraph::from_edges([], [(1, 2), (2, 3), (3, 4)]).unwrap(), &[3]);
        assert_eq!(friend_list(&w, 1, 99, 10), Access::NotFound);
        assert_eq!(friend_list(&w, 1, 3, 10), Access::Forbidden);
        assert!(matches!(friend_list(&w, 2, 3, 10), Access::Granted(_)));
        assert!(matches!(friend_list(&w, 3, 3, 10), Access::Granted(_)));
        match friend_list(&w, 1, 3, 1) {
            Access::Forbidden => {}
            other => panic!("{other:?}"),
        }
        match friend_list(&w, 4, 3, 1) {
            Access::Granted(l) => {
                assert_eq!(l.friends, vec![2]);
                assert!(l.truncated);
            }
            other => panic!("{other:?}"),
        }
    }
}
