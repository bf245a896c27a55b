//! Sending printed calls to a GraphQL endpoint.

use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;
use url::Url;

use crate::printer::RequestBody;

/// Mirrors the timeout written into generated tests.
pub const DEFAULT_TIMEOUT_MS: u64 = 60_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawReply {
    pub status: u16,
    pub content_type: String,
    pub body: Vec<u8>,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("connection refused: {0}")]
    ConnectionRefused(String),
    #[error("request timed out")]
    Timeout,
    #[error("TLS failure: {0}")]
    TlsFailure(String),
    #[error("transport error: {0}")]
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("`{0}` is not an absolute http(s) URL")]
    BadUrl(String),
    #[error("header `{0}` is not of the form `Name: value`")]
    BadHeader(String),
    #[error("{0} must be positive")]
    NotPositive(&'static str),
}

/// Issues one GraphQL call and returns the raw reply.
pub trait Executor {
    fn execute(&mut self, body: &RequestBody) -> Result<RawReply, TransportError>;
}

/// Source of coverage units executed since the previous poll, in execution
/// order.
pub trait CoverageFeed {
    fn poll(&mut self) -> Result<Vec<String>, TransportError>;

    /// Every unit the SUT can report, when it declares them up front.
    fn known_units(&mut self) -> Vec<String> {
        Vec::new()
    }
}

impl<E: Executor + ?Sized> Executor for &mut E {
    fn execute(&mut self, body: &RequestBody) -> Result<RawReply, TransportError> {
        (**self).execute(body)
    }
}

impl<F: CoverageFeed + ?Sized> CoverageFeed for &mut F {
    fn poll(&mut self) -> Result<Vec<String>, TransportError> {
        (**self).poll()
    }

    fn known_units(&mut self) -> Vec<String> {
        (**self).known_units()
    }
}

/// Wire body: a JSON object with a single `query` member.
pub fn wire_body(body: &RequestBody) -> String {
    serde_json::json!({ "query": body.query_text }).to_string()
}

/// Parses an http(s) URL and appends `/graphql` when it has no path.
pub fn endpoint_url(raw: &str) -> Result<Url, ConfigError> {
    let mut url = Url::parse(raw).map_err(|_| ConfigError::BadUrl(raw.to_string()))?;
    if !matches!(url.scheme(), "http" | "https") || url.host().is_none() {
        return Err(ConfigError::BadUrl(raw.to_string()));
    }
    if url.path().is_empty() || url.path() == "/" {
        url.set_path("/graphql");
    }
    Ok(url)
}

/// Splits `Name: value`; the value keeps inner whitespace.
pub fn parse_header(raw: &str) -> Result<(String, String), ConfigError> {
    let (name, value) = raw
        .split_once(':')
        .ok_or_else(|| ConfigError::BadHeader(raw.to_string()))?;
    let name = name.trim();
    let valid = !name.is_empty()
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b"!#$%&'*+-.^_`|~".contains(&b));
    if !valid {
        return Err(ConfigError::BadHeader(raw.to_string()));
    }
    Ok((name.to_string(), value.trim().to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecConfig {
    pub base_url: Url,
    pub extra_headers: Vec<(String, String)>,
    pub rate_limit_per_min: Option<u32>,
    pub timeout_ms: u64,
}

impl ExecConfig {
    pub fn new(base_url: &str) -> Result<Self, ConfigError> {
        Ok(ExecConfig {
            base_url: endpoint_url(base_url)?,
            extra_headers: Vec::new(),
            rate_limit_per_min: None,
            timeout_ms: DEFAULT_TIMEOUT_MS,
        })
    }

    pub fn with_header(mut self, raw: &str) -> Result<Self, ConfigError> {
        self.extra_headers.push(parse_header(raw)?);
        Ok(self)
    }

    pub fn with_rate_limit(mut self, per_min: u32) -> Result<Self, ConfigError> {
        if per_min == 0 {
            return Err(ConfigError::NotPositive("rate limit"));
        }
        self.rate_limit_per_min = Some(per_min);
        Ok(self)
    }

    pub fn with_timeout_ms(mut self, ms: u64) -> Result<Self, ConfigError> {
        if ms == 0 {
            return Err(ConfigError::NotPositive("timeout"));
        }
        self.timeout_ms = ms;
        Ok(self)
    }
}

/// Spaces consecutive acquisitions at least `min_gap` apart. Clones share
/// the same clock, and the lock is held while waiting so concurrent
/// callers are serialized.
#[derive(Debug, Clone)]
pub struct RateLimiter {
    min_gap: Duration,
    last: Arc<Mutex<Option<Instant>>>,
}

impl RateLimiter {
    pub fn per_minute(rate: u32) -> Self {
        assert!(rate > 0, "rate must be positive");
        RateLimiter {
            min_gap: Duration::from_millis(60_000u64.div_ceil(u64::from(rate))),
            last: Arc::new(Mutex::new(None)),
        }
    }

    pub fn min_gap(&self) -> Duration {
        self.min_gap
    }

    /// Blocks until a request may be sent and records its send time.
    pub fn acquire(&self) {
        let mut last = self.last.lock().expect("rate limiter lock");
        if let Some(prev) = *last {
            let ready = prev + self.min_gap;
            let now = Instant::now();
            if ready > now {
                thread::sleep(ready - now);
            }
        }
        *last = Some(Instant::now());
    }
}

fn map_error(e: ureq::Error) -> TransportError {
    match e {
        ureq::Error::Timeout(_) => TransportError::Timeout,
        ureq::Error::ConnectionFailed | ureq::Error::HostNotFound => {
            TransportError::ConnectionRefused(e.to_string())
        }
        ureq::Error::Io(io) => match io.kind() {
            std::io::ErrorKind::ConnectionRefused | std::io::ErrorKind::ConnectionReset => {
                TransportError::ConnectionRefused(io.to_string())
            }
            std::io::ErrorKind::TimedOut => TransportError::Timeout,
            _ => TransportError::Other(io.to_string()),
        },
        ureq::Error::Tls(_) | ureq::Error::Rustls(_) | ureq::Error::TlsRequired => {
            TransportError::TlsFailure(e.to_string())
        }
        other => TransportError::Other(other.to_string()),
    }
}

/// Blocking HTTP executor using POST with a JSON body.
#[derive(Debug, Clone)]
pub struct HttpExecutor {
    config: ExecConfig,
    agent: ureq::Agent,
    limiter: Option<RateLimiter>,
}

impl HttpExecutor {
    pub fn new(config: ExecConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        let limiter = config.rate_limit_per_min.map(RateLimiter::per_minute);
        HttpExecutor {
            config,
            agent,
            limiter,
        }
    }

    pub fn config(&self) -> &ExecConfig {
        &self.config
    }

    /// POSTs an arbitrary JSON document, e.g. the introspection query.
    pub fn post_json(&self, json: &str) -> Result<RawReply, TransportError> {
        if let Some(l) = &self.limiter {
            l.acquire();
        }
        let start = Instant::now();
        let mut req = self
            .agent
            .post(self.config.base_url.as_str())
            .header("Content-Type", "application/json")
            .header("Accept", "application/json");
        for (name, value) in &self.config.extra_headers {
            req = req.header(name.as_str(), value.as_str());
        }
        let mut resp = req.send(json).map_err(map_error)?;
        let status = resp.status().as_u16();
        let content_type = resp
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
            .to_string();
        let body = resp
            .body_mut()
            .with_config()
            .limit(64 * 1024 * 1024)
            .read_to_vec()
            .map_err(map_error)?;
        Ok(RawReply {
            status,
            content_type,
            body,
            elapsed_ms: start.elapsed().as_millis() as u64,
        })
    }
}

impl Executor for HttpExecutor {
    fn execute(&mut self, body: &RequestBody) -> Result<RawReply, TransportError> {
        self.post_json(&wire_body(body))
    }
}

/// Coverage feed that GETs a JSON array of unit ids. The unit universe is
/// read from the same URL with `/units` appended.
#[derive(Debug, Clone)]
pub struct HttpCoverageFeed {
    url: Url,
    agent: ureq::Agent,
}

impl HttpCoverageFeed {
    pub fn new(url: &str, timeout_ms: u64) -> Result<Self, ConfigError> {
        let url = Url::parse(url).map_err(|_| ConfigError::BadUrl(url.to_string()))?;
        if !matches!(url.scheme(), "http" | "https") {
            return Err(ConfigError::BadUrl(url.to_string()));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(timeout_ms)))
            .build()
            .into();
        Ok(HttpCoverageFeed { url, agent })
    }
}

impl HttpCoverageFeed {
    fn get_list(&self, url: &str) -> Result<Vec<String>, TransportError> {
        let mut resp = self.agent.get(url).call().map_err(map_error)?;
        let bytes = resp.body_mut().read_to_vec().map_err(map_error)?;
        serde_json::from_slice(&bytes).map_err(|e| TransportError::Other(e.to_string()))
    }
}

impl CoverageFeed for HttpCoverageFeed {
    fn poll(&mut self) -> Result<Vec<String>, TransportError> {
        self.get_list(self.url.as_str())
    }

    fn known_units(&mut self) -> Vec<String> {
        let url = format!("{}/units", self.url.as_str().trim_end_matches('/'));
        self.get_list(&url).unwrap_or_default()
    }
}
