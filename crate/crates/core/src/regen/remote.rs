use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::Serialize;

use super::protocol::{
    ErrorBody, GenerateReply, GenerateRequestBody, HealthBody, GENERATE_PATH, HEALTH_PATH,
};
use super::{BackendDescriptor, BackendError, BackendKind, GenerationBackend};
use crate::imaging::{BitEdgeMap, RgbImage};
use crate::prompts::TextualPrompt;

#[derive(Clone, Debug)]
pub struct RemoteConfig {
    pub timeout: Duration,
    pub max_in_flight: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(120),
            max_in_flight: 4,
        }
    }
}

struct Permits {
    free: Mutex<usize>,
    ready: Condvar,
}

impl Permits {
    fn acquire(&self) -> PermitGuard<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.ready.wait(free).unwrap();
        }
        *free -= 1;
        PermitGuard(self)
    }
}

struct PermitGuard<'a>(&'a Permits);

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.ready.notify_one();
    }
}

/// Client for a generation service speaking the `/v1` protocol.
pub struct RemoteBackend {
    descriptor: BackendDescriptor,
    base: String,
    agent: ureq::Agent,
    permits: Permits,
}

const MAX_BODY: u64 = 256 * 1024 * 1024;

fn transport(e: ureq::Error) -> BackendError {
    match e {
        ureq::Error::Timeout(_) => BackendError::Timeout,
        other => BackendError::Transport(other.to_string()),
    }
}

impl RemoteBackend {
    /// Connects and asks the service for its backend id, which becomes
    /// this backend's identifier (and so part of every cache key).
    pub fn connect(endpoint: &str, config: RemoteConfig) -> Result<Self, BackendError> {
        let base = endpoint.trim_end_matches('/').to_string();
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut resp = agent
            .get(format!("{base}{HEALTH_PATH}"))
            .call()
            .map_err(transport)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(transport)?;
        if status != 200 {
            return Err(protocol_error(status, &text));
        }
        let health: HealthBody = serde_json::from_str(&text)
            .map_err(|e| BackendError::Malformed(format!("health body: {e}")))?;
        if health.backend_id.is_empty() {
            return Err(BackendError::Malformed("empty backend_id".into()));
        }
        Ok(Self {
            descriptor: BackendDescriptor {
                kind: BackendKind::Remote,
                identifier: health.backend_id,
                endpoint: Some(base.clone()),
            },
            base,
            agent,
            permits: Permits {
                free: Mutex::new(config.max_in_flight.max(1)),
                ready: Condvar::new(),
            },
        })
    }

    /// Sends an arbitrary JSON body to `path` and returns the status and
    /// raw response text. Used by conformance checks.
    pub fn post_raw(
        &self,
        path: &str,
        body: &impl Serialize,
    ) -> Result<(u16, String), BackendError> {
        let _permit = self.permits.acquire();
        let mut resp = self
            .agent
            .post(format!("{}{path}", self.base))
            .send_json(body)
            .map_err(transport)?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .with_config()
            .limit(MAX_BODY)
            .read_to_string()
            .map_err(transport)?;
        Ok((status, text))
    }

    pub fn get_raw(&self, path: &str) -> Result<(u16, String), BackendError> {
        let _permit = self.permits.acquire();
        let mut resp = self
            .agent
            .get(format!("{}{path}", self.base))
            .call()
            .map_err(transport)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(transport)?;
        Ok((status, text))
    }
}

fn protocol_error(status: u16, text: &str) -> BackendError {
    match serde_json::from_str::<ErrorBody>(text) {
        Ok(ErrorBody { error }) => BackendError::Protocol {
            status,
            code: error.code,
            message: error.message,
        },
        Err(_) => BackendError::Protocol {
            status,
            code: "http".into(),
            message: text.chars().take(200).collect(),
        },
    }
}

/// Client side of `POST /v1/generate`.
pub fn remote_generate(
    backend: &RemoteBackend,
    edges: &BitEdgeMap,
    text: &TextualPrompt,
    seed: u64,
) -> Result<RgbImage, BackendError> {
    let body = GenerateRequestBody::new(edges, text.as_str(), seed);
    let (status, reply) = backend.post_raw(GENERATE_PATH, &body)?;
    if status != 200 {
        return Err(protocol_error(status, &reply));
    }
    let img = match serde_json::from_str::<GenerateReply>(&reply) {
        Ok(GenerateReply::Ok(ok)) => ok.image().map_err(BackendError::Malformed)?,
        Ok(GenerateReply::Err(ErrorBody { error })) => {
            return Err(BackendError::Protocol {
                status,
                code: error.code,
                message: error.message,
            })
        }
        Err(e) => return Err(BackendError::Malformed(e.to_string())),
    };
    if (img.height(), img.width()) != (edges.height(), edges.width()) {
        return Err(BackendError::DimensionMismatch {
            want_h: edges.height(),
            want_w: edges.width(),
            got_h: img.height(),
            got_w: img.width(),
        });
    }
    Ok(img)
}

impl GenerationBackend for RemoteBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn generate_raw(
        &self,
        edges: &BitEdgeMap,
        text: &TextualPrompt,
        seed: u64,
    ) -> Result<RgbImage, BackendError> {
        remote_generate(self, edges, text, seed)
    }
}
