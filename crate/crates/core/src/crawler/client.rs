use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::Deserialize;
use ureq::http::StatusCode;

use super::CrawlError;
use crate::graph::NodeId;
use crate::service::{FriendList, SESSION_COOKIE};

/// How the client reacts to throttling and server failures.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts for 5xx responses and transport errors.
    pub server_error_attempts: u32,
    /// First backoff; doubled after each failed attempt.
    pub backoff_base: Duration,
    pub request_timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            server_error_attempts: 3,
            backoff_base: Duration::from_millis(100),
            request_timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchOutcome {
    Friends(FriendList),
    NotFound,
    Private,
    /// Retries exhausted or an unexpected response.
    Failed(String),
}

/// A logged-in session against the OSN service.
pub struct OsnClient {
    agent: ureq::Agent,
    base: String,
    cookie: String,
    self_id: NodeId,
    policy: RetryPolicy,
    throttled: AtomicU64,
    retries: AtomicU64,
}

#[derive(Deserialize)]
struct LoginBody {
    id: NodeId,
}

enum Attempt {
    Response(StatusCode, Option<String>, String),
    Transport(String),
}

impl OsnClient {
    pub fn login(endpoint: &str, username: &str, password: &str) -> Result<Self, CrawlError> {
        Self::login_with(endpoint, username, password, RetryPolicy::default())
    }

    pub fn login_with(endpoint: &str, username: &str, password: &str, policy: RetryPolicy) -> Result<Self, CrawlError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(policy.request_timeout))
            .build()
            .into();
        let base = endpoint.trim_end_matches('/').to_string();
        let url = format!("{base}/login");
        let mut last = String::new();
        for attempt in 0..policy.server_error_attempts.max(1) {
            if attempt > 0 {
                thread::sleep(policy.backoff_base * 2u32.pow(attempt - 1));
            }
            let resp = agent.post(&url).send_form([("username", username), ("password", password)]);
            let mut resp = match resp {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status();
            if status.is_server_error() {
                last = format!("HTTP {status}");
                continue;
            }
            if status == StatusCode::UNAUTHORIZED {
                return Err(CrawlError::Login("bad credentials".into()));
            }
            if status != StatusCode::OK {
                return Err(CrawlError::Login(format!("unexpected HTTP {status}")));
            }
            let cookie = resp
                .headers()
                .get_all("set-cookie")
                .iter()
                .filter_map(|v| v.to_str().ok())
                .filter_map(|v| v.split(';').next())
                .find(|kv| kv.trim_start().starts_with(&format!("{SESSION_COOKIE}=")))
                .map(|s| s.trim().to_string())
                .ok_or_else(|| CrawlError::Login("no session cookie in login response".into()))?;
            let body = resp.body_mut().read_to_string().map_err(|e| CrawlError::Login(e.to_string()))?;
            let parsed: LoginBody = serde_json::from_str(&body).map_err(|e| CrawlError::Login(e.to_string()))?;
            return Ok(OsnClient {
                agent,
                base,
                cookie,
                self_id: parsed.id,
                policy,
                throttled: AtomicU64::new(0),
                retries: AtomicU64::new(0),
            });
        }
        Err(CrawlError::Login(format!("service unreachable: {last}")))
    }

    /// The user this session is logged in as.
    pub fn self_id(&self) -> NodeId {
        self.self_id
    }

    /// 429 responses received so far.
    pub fn throttled(&self) -> u64 {
        self.throttled.load(Ordering::Relaxed)
    }

    /// Retries after 5xx responses or transport errors.
    pub fn retries(&self) -> u64 {
        self.retries.load(Ordering::Relaxed)
    }

    fn get(&self, id: Option<NodeId>) -> Attempt {
        let mut req = self.agent.get(format!("{}/friends", self.base)).header("Cookie", &self.cookie).query("filter", "afp");
        if let Some(id) = id {
            req = req.query("id", id.to_string());
        }
        match req.call() {
            Ok(mut r) => {
                let retry_after = r.headers().get("retry-after").and_then(|v| v.to_str().ok()).map(str::to_string);
                let body = r.body_mut().read_to_string().unwrap_or_default();
                Attempt::Response(r.status(), retry_after, body)
            }
            Err(e) => Attempt::Transport(e.to_string()),
        }
    }

    /// Fetches a friend list, `None` meaning the session's own list.
    ///
    /// 429 responses are retried after the advertised `Retry-After` for as
    /// long as `deadline` allows; [`CrawlError::Deadline`] is returned when
    /// waiting would overrun it. Server errors are retried with exponential
    /// backoff and reported as [`FetchOutcome::Failed`] once exhausted.
    pub fn friends(&self, id: Option<NodeId>, deadline: Option<Instant>) -> Result<FetchOutcome, CrawlError> {
        let mut failures = 0u32;
        loop {
            let problem = match self.get(id) {
                Attempt::Response(status, retry_after, body) => match status {
                    StatusCode::OK => {
                        return match serde_json::from_str::<FriendList>(&body) {
                            Ok(list) => Ok(FetchOutcome::Friends(list)),
                            Err(e) => Ok(FetchOutcome::Failed(format!("malformed friend list: {e}"))),
                        };
                    }
                    StatusCode::NOT_FOUND => return Ok(FetchOutcome::NotFound),
                    StatusCode::FORBIDDEN => return Ok(FetchOutcome::Private),
                    StatusCode::UNAUTHORIZED => return Err(CrawlError::Unauthorized),
                    StatusCode::TOO_MANY_REQUESTS => {
                        self.throttled.fetch_add(1, Ordering::Relaxed);
                        let wait = retry_after
                            .and_then(|s| s.trim().parse::<f64>().ok())
                            .filter(|s| s.is_finite() && *s >= 0.0)
                            .map(Duration::from_secs_f64)
                            .unwrap_or(Duration::from_secs(1));
                        if deadline.is_some_and(|d| Instant::now() + wait > d) {
                            return Err(CrawlError::Deadline);
                        }
                        debug!("throttled; waiting {wait:?}");
                        thread::sleep(wait);
                        continue;
                    }
                    s if s.is_server_error() => format!("HTTP {s}"),
                    s => return Ok(FetchOutcome::Failed(format!("HTTP {s}: {}", body.trim()))),
                },
                Attempt::Transport(e) => e,
            };
            failures += 1;
            if failures >= self.policy.server_error_attempts {
                warn!("giving up on {id:?} after {failures} attempts: {problem}");
                return Ok(FetchOutcome::Failed(problem));
            }
            self.retries.fetch_add(1, Ordering::Relaxed);
            let backoff = self.policy.backoff_base * 2u32.pow(failures - 1);
            if deadline.is_some_and(|d| Instant::now() + backoff > d) {
                return Err(CrawlError::Deadline);
            }
            thread::sleep(backoff);
        }
    }
}
