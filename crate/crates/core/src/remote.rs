//! Client side of the inference-service wire protocol.
//!
//! Endpoints, all JSON bodies:
//!
//! * `POST /infill`  `{"tokens": [..], "beam_size": 4, "length_penalty": 3.0}`
//!   returns `{"tokens": [..]}` with no mask sentinel.
//! * `POST /predict` `{"source": "..", "target": "..", "reference": ".."?}`
//!   returns `{"probs": [..]}`, one probability per whitespace token of `target`.
//! * `GET /health` returns `{"ready": bool}`; a 503 status also means not ready.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::MASK_TOKEN;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_IN_FLIGHT: usize = 8;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireInfillRequest {
    pub tokens: Vec<String>,
    pub beam_size: u32,
    pub length_penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireInfillResponse {
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirePredictRequest {
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePredictResponse {
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireHealth {
    pub ready: bool,
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Limiter {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Blocking HTTP client for the inference service.
pub struct RemoteClient {
    endpoint: String,
    agent: ureq::Agent,
    limiter: Limiter,
    sentinel: String,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient")
            .field("endpoint", &self.endpoint)
            .field("sentinel", &self.sentinel)
            .finish_non_exhaustive()
    }
}

impl RemoteClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self::with_options(endpoint, DEFAULT_MAX_IN_FLIGHT, DEFAULT_TIMEOUT)
    }

    pub fn with_options(endpoint: impl Into<String>, max_in_flight: usize, timeout: Duration) -> Self {
        let endpoint = endpoint.into().trim_end_matches('/').to_owned();
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        RemoteClient {
            endpoint,
            agent: ureq::Agent::new_with_config(config),
            limiter: Limiter::new(max_in_flight),
            sentinel: MASK_TOKEN.to_owned(),
        }
    }

    pub fn with_sentinel(mut self, sentinel: impl Into<String>) -> Self {
        self.sentinel = sentinel.into();
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn sentinel(&self) -> &str {
        &self.sentinel
    }

    fn transport(&self, message: impl std::fmt::Display) -> Error {
        Error::Transport {
            endpoint: self.endpoint.clone(),
            message: message.to_string(),
        }
    }

    fn protocol(&self, message: impl std::fmt::Display) -> Error {
        Error::Protocol {
            endpoint: self.endpoint.clone(),
            message: message.to_string(),
        }
    }

    fn decode<T: DeserializeOwned>(&self, mut resp: ureq::http::Response<ureq::Body>) -> Result<T> {
        let status = resp.status();
        let body = resp.body_mut().read_to_string().map_err(|e| self.transport(e))?;
        if !status.is_success() {
            return Err(self.transport(format!("HTTP {status}: {}", body.trim())));
        }
        serde_json::from_str(&body).map_err(|e| self.protocol(format!("bad response body: {e}")))
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp> {
        let _permit = self.limiter.acquire();
        let resp = self
            .agent
            .post(&format!("{}{path}", self.endpoint))
            .send_json(body)
            .map_err(|e| self.transport(e))?;
        self.decode(resp)
    }

    /// Whether the service reports itself ready.
    pub fn health(&self) -> Result<bool> {
        let resp = self
            .agent
            .get(&format!("{}/health", self.endpoint))
            .call()
            .map_err(|e| self.transport(e))?;
        if resp.status().as_u16() == 503 {
            return Ok(false);
        }
        let h: WireHealth = self.decode(resp)?;
        Ok(h.ready)
    }

    /// Sends a noised token list and returns the decoded tokens.
    pub fn infill(&self, tokens: &[String], beam_size: u32, length_penalty: f64) -> Result<Vec<String>> {
        let req = WireInfillRequest {
            tokens: tokens.to_vec(),
            beam_size,
            length_penalty,
        };
        let resp: WireInfillResponse = self.post("/infill", &req)?;
        if let Some(position) = resp.tokens.iter().position(|t| t.contains(&*self.sentinel)) {
            return Err(Error::SentinelInOutput { position });
        }
        Ok(resp.tokens)
    }

    /// Per-token hallucination probabilities for `target`.
    pub fn predict(&self, source: &str, target: &str, reference: Option<&str>) -> Result<Vec<f64>> {
        let req = WirePredictRequest {
            source: source.to_owned(),
            target: target.to_owned(),
            reference: reference.map(str::to_owned),
        };
        let resp: WirePredictResponse = self.post("/predict", &req)?;
        let expected = target.split_whitespace().count();
        if resp.probs.len() != expected {
            return Err(self.protocol(format!("expected {expected} probabilities, got {}", resp.probs.len())));
        }
        if let Some(i) = resp.probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(self.protocol(format!("probability {i} is {} (outside [0, 1])", resp.probs[i])));
        }
        Ok(resp.probs)
    }
}
