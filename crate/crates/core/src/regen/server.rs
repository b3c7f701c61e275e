//! Minimal HTTP server for the generation protocol, backed by any local
//! [`GenerationBackend`]. With the stub backend it lets the remote client
//! be exercised end to end without a real diffusion service.

use std::io::Read;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use tiny_http::{Header, Method, Request, Response, Server};

use super::protocol::{
    ErrorBody, GenerateRequestBody, GenerateResponseBody, HealthBody, GENERATE_PATH, HEALTH_PATH,
};
use super::GenerationBackend;
use crate::prompts::TextualPrompt;

const MAX_REQUEST: u64 = 64 * 1024 * 1024;

pub struct FakeServer {
    server: Arc<Server>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

fn json_response(status: u16, body: &impl serde::Serialize) -> Response<std::io::Cursor<Vec<u8>>> {
    let bytes = serde_json::to_vec(body).expect("serializable body");
    Response::from_data(bytes)
        .with_status_code(status)
        .with_header(Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..]).unwrap())
}

fn handle(backend: &dyn GenerationBackend, mut req: Request) {
    let url = req.url().split('?').next().unwrap_or("").to_string();
    let response = match (req.method(), url.as_str()) {
        (Method::Get, HEALTH_PATH) => json_response(
            200,
            &HealthBody {
                backend_id: backend.descriptor().identifier.clone(),
            },
        ),
        (Method::Post, GENERATE_PATH) => {
            let mut raw = Vec::new();
            let read = req.as_reader().take(MAX_REQUEST).read_to_end(&mut raw);
            match read
                .map_err(|e| e.to_string())
                .and_then(|_| generate(backend, &raw))
            {
                Ok(body) => json_response(200, &body),
                Err(message) => json_response(400, &ErrorBody::new("bad_request", message)),
            }
        }
        (_, GENERATE_PATH) | (_, HEALTH_PATH) => json_response(
            405,
            &ErrorBody::new(
                "method_not_allowed",
                format!("{} not allowed", req.method()),
            ),
        ),
        _ => json_response(
            404,
            &ErrorBody::new("not_found", format!("no route for {url}")),
        ),
    };
    let _ = req.respond(response);
}

fn generate(backend: &dyn GenerationBackend, raw: &[u8]) -> Result<GenerateResponseBody, String> {
    let body: GenerateRequestBody =
        serde_json::from_slice(raw).map_err(|e| format!("invalid request body: {e}"))?;
    if body.height == 0 || body.width == 0 || !body.height.is_multiple_of(64) || !body.width.is_multiple_of(64) {
        return Err(format!(
            "height/width {}x{} must be positive multiples of 64",
            body.height, body.width
        ));
    }
    let edges = body.edges()?;
    let text = TextualPrompt::parse(&body.prompt).map_err(|e| format!("prompt: {e}"))?;
    let img = backend
        .generate_raw(&edges, &text, body.seed)
        .map_err(|e| e.to_string())?;
    Ok(GenerateResponseBody::new(&img))
}

impl FakeServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and serves on a
    /// background thread, one handler thread per request.
    pub fn start(addr: &str, backend: Arc<dyn GenerationBackend>) -> std::io::Result<Self> {
        let server = Arc::new(Server::http(addr).map_err(std::io::Error::other)?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("server is not bound to an IP address"))?;
        let accept = Arc::clone(&server);
        let worker = std::thread::spawn(move || {
            for req in accept.incoming_requests() {
                let backend = Arc::clone(&backend);
                std::thread::spawn(move || handle(backend.as_ref(), req));
            }
        });
        Ok(Self {
            server,
            addr,
            worker: Some(worker),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server stops (it never does on its own).
    pub fn join(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for FakeServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}
