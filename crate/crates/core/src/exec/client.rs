use std::io;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use ureq::http;

use super::RequestPlan;

/// Largest response body read into memory.
const READ_LIMIT: u64 = 16 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClientConfig {
    pub timeout: Duration,
    /// A static header sent with every request, as `Name: value`.
    pub auth_header: Option<String>,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            timeout: Duration::from_secs(10),
            auth_header: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TransportErrorKind {
    Timeout,
    Connect,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResponseBody {
    /// Body as text (lossy for non-UTF-8 bytes).
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<Value>,
    /// Byte length before any truncation.
    pub len: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

impl ResponseBody {
    pub fn from_bytes(bytes: &[u8]) -> Self {
        ResponseBody {
            text: String::from_utf8_lossy(bytes).into_owned(),
            json: serde_json::from_slice(bytes).ok(),
            len: bytes.len() as u64,
            truncated: false,
        }
    }

    /// Cuts the text at `cap` bytes (on a char boundary) and drops the parsed JSON.
    pub fn truncate(&mut self, cap: usize) {
        if self.text.len() <= cap {
            return;
        }
        let mut end = cap;
        while !self.text.is_char_boundary(end) {
            end -= 1;
        }
        self.text.truncate(end);
        self.json = None;
        self.truncated = true;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum CallOutcome {
    Response {
        status: u16,
        headers: Vec<(String, String)>,
        body: ResponseBody,
    },
    TransportError {
        kind: TransportErrorKind,
        message: String,
    },
}

/// Where in a run a call was made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeedContext {
    pub seed: u64,
    pub test_index: u64,
}

/// One HTTP exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CallRecord {
    pub operation: String,
    pub plan: RequestPlan,
    pub outcome: CallOutcome,
    /// Microseconds since the Unix epoch when the request was sent.
    pub timestamp_us: u64,
    pub latency_us: u64,
    pub seed_context: SeedContext,
}

impl CallRecord {
    pub fn status(&self) -> Option<u16> {
        match &self.outcome {
            CallOutcome::Response { status, .. } => Some(*status),
            CallOutcome::TransportError { .. } => None,
        }
    }

    pub fn body(&self) -> Option<&ResponseBody> {
        match &self.outcome {
            CallOutcome::Response { body, .. } => Some(body),
            CallOutcome::TransportError { .. } => None,
        }
    }

    pub fn is_transport_error(&self) -> bool {
        self.status().is_none()
    }
}

/// Blocking HTTP client. Cheap to clone and safe to share across threads.
#[derive(Debug, Clone)]
pub struct Client {
    agent: ureq::Agent,
    auth: Option<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("auth header must look like `Name: value`, got {0:?}")]
pub struct AuthHeaderError(pub String);

impl Client {
    pub fn new(cfg: &ClientConfig) -> Result<Self, AuthHeaderError> {
        let auth = match &cfg.auth_header {
            Some(h) => {
                let (name, value) = h.split_once(':').ok_or_else(|| AuthHeaderError(h.clone()))?;
                let name = name.trim();
                if name.is_empty() || http::HeaderName::from_bytes(name.as_bytes()).is_err() {
                    return Err(AuthHeaderError(h.clone()));
                }
                Some((name.to_string(), value.trim().to_string()))
            }
            None => None,
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .max_redirects(0)
            .build()
            .into();
        Ok(Client { agent, auth })
    }

    /// Sends `plan` once. Never fails: transport problems become a
    /// [`CallOutcome::TransportError`].
    pub fn execute(&self, operation: &str, plan: &RequestPlan, ctx: SeedContext) -> CallRecord {
        let timestamp_us = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_micros() as u64);
        let start = Instant::now();
        let outcome = match self.send(plan) {
            Ok(o) => o,
            Err(e) => CallOutcome::TransportError {
                kind: classify(&e),
                message: e.to_string(),
            },
        };
        CallRecord {
            operation: operation.to_string(),
            plan: plan.clone(),
            outcome,
            timestamp_us,
            latency_us: start.elapsed().as_micros() as u64,
            seed_context: ctx,
        }
    }

    /// Sends a bare request with no record, e.g. a reset hook.
    pub fn send(&self, plan: &RequestPlan) -> Result<CallOutcome, ureq::Error> {
        let mut builder = http::Request::builder()
            .method(plan.verb.as_str())
            .uri(&plan.url);
        for (name, value) in &plan.headers {
            builder = builder.header(name, value);
        }
        if let Some((name, value)) = &self.auth {
            builder = builder.header(name, value);
        }
        let mut response = match &plan.body {
            Some(body) => {
                let req = builder
                    .header("content-type", &body.media_type)
                    .body(body.text.as_bytes().to_vec())?;
                self.agent.run(req)?
            }
            None => self.agent.run(builder.body(())?)?,
        };
        let status = response.status().as_u16();
        let headers = response
            .headers()
            .iter()
            .map(|(k, v)| (k.as_str().to_string(), String::from_utf8_lossy(v.as_bytes()).into_owned()))
            .collect();
        let bytes = response
            .body_mut()
            .with_config()
            .limit(READ_LIMIT)
            .read_to_vec()?;
        Ok(CallOutcome::Response {
            status,
            headers,
            body: ResponseBody::from_bytes(&bytes),
        })
    }
}

fn classify(e: &ureq::Error) -> TransportErrorKind {
    match e {
        ureq::Error::Timeout(_) => TransportErrorKind::Timeout,
        ureq::Error::HostNotFound | ureq::Error::ConnectionFailed => TransportErrorKind::Connect,
        ureq::Error::Io(io) => match io.kind() {
            io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock => TransportErrorKind::Timeout,
            io::ErrorKind::ConnectionRefused
            | io::ErrorKind::ConnectionReset
            | io::ErrorKind::ConnectionAborted
            | io::ErrorKind::NotConnected
            | io::ErrorKind::AddrNotAvailable => TransportErrorKind::Connect,
            _ => TransportErrorKind::Other,
        },
        _ => TransportErrorKind::Other,
    }
}
