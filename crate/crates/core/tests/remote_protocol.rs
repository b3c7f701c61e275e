#![cfg(feature = "remote")]

use std::sync::Arc;
use std::time::Duration;

use edgemem::imaging::{BitEdgeMap, RgbImage};
use edgemem::prompts::{PromptRecord, ResizeScheme, TextualPrompt, VisualPrompt};
use edgemem::regen::conformance::{invalid_cases, run_conformance, valid_cases};
use edgemem::regen::protocol::{ErrorBody, GenerateRequestBody, GenerateResponseBody, HealthBody};
use edgemem::regen::{
    remote_generate, BackendError, FakeServer, GenerationBackend, GenerationCache, RegenError,
    Regenerator, RemoteBackend, RemoteConfig, StubBackend,
};

fn ring(n: usize) -> BitEdgeMap {
    let c = (n as f64 - 1.0) / 2.0;
    BitEdgeMap::from_fn(n, n, |y, x| {
        (((y as f64 - c).powi(2) + (x as f64 - c).powi(2)).sqrt() - n as f64 * 0.3).abs() < 0.5
    })
}

fn text(s: &str) -> TextualPrompt {
    TextualPrompt::parse(s).unwrap()
}

/// A protocol server whose `/v1/generate` replies are scripted by `reply`.
fn scripted<F>(reply: F) -> (String, std::thread::JoinHandle<()>, Arc<tiny_http::Server>)
where
    F: Fn(GenerateRequestBody) -> (u16, String) + Send + 'static,
{
    let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
    let url = format!("http://{}", server.server_addr().to_ip().unwrap());
    let s = Arc::clone(&server);
    let handle = std::thread::spawn(move || {
        for mut req in s.incoming_requests() {
            let (status, body) = if req.url() == "/v1/health" {
                (
                    200,
                    serde_json::to_string(&HealthBody {
                        backend_id: "scripted-v1".into(),
                    })
                    .unwrap(),
                )
            } else {
                let mut raw = String::new();
                req.as_reader().read_to_string(&mut raw).unwrap();
                reply(serde_json::from_str(&raw).unwrap())
            };
            let _ = req.respond(tiny_http::Response::from_string(body).with_status_code(status));
        }
    });
    (url, handle, server)
}

fn prompt() -> PromptRecord {
    PromptRecord {
        visual: VisualPrompt {
            edges: ring(64),
            orig_h: 64,
            orig_w: 64,
            scheme: ResizeScheme::ImageFirst,
        },
        textual: text("red triangle"),
        class_id: 0,
        source_id: "c000-0001".into(),
    }
}

#[test]
fn fake_server_passes_the_whole_corpus() {
    let stub = Arc::new(StubBackend::default());
    let server = FakeServer::start("127.0.0.1:0", stub.clone()).unwrap();
    let report = run_conformance(&server.url(), Some(stub.as_ref())).unwrap();
    assert!(report.all_passed(), "{report}");
    assert_eq!(
        report.cases.len(),
        1 + valid_cases().len() + invalid_cases().len() + 1
    );
    assert!(
        report
            .cases
            .iter()
            .filter(|c| c.detail.contains("matches reference"))
            .count()
            == valid_cases().len()
    );
}

#[test]
fn remote_and_local_stub_share_cache_entries() {
    let stub = Arc::new(StubBackend::default());
    let server = FakeServer::start("127.0.0.1:0", stub.clone()).unwrap();
    let remote = Arc::new(RemoteBackend::connect(&server.url(), RemoteConfig::default()).unwrap());
    assert_eq!(remote.descriptor().identifier, stub.descriptor().identifier);

    let dir = tempfile::tempdir().unwrap();
    let over_http = Regenerator::new(remote, GenerationCache::on_disk(dir.path()).unwrap());
    let images: Vec<RgbImage> = over_http
        .regenerate_prompt(&prompt(), 3, 11)
        .into_iter()
        .map(Result::unwrap)
        .collect();
    assert_eq!(over_http.backend_calls(), 3);

    let local = Regenerator::new(stub, GenerationCache::on_disk(dir.path()).unwrap());
    let again: Vec<RgbImage> = local
        .regenerate_prompt(&prompt(), 3, 11)
        .into_iter()
        .map(Result::unwrap)
        .collect();
    assert_eq!(local.backend_calls(), 0);
    assert_eq!(images, again);
}

#[test]
fn client_error_is_typed_and_not_cached() {
    let (url, _h, _s) = scripted(|_| {
        (
            422,
            serde_json::to_string(&ErrorBody::new("unsupported", "no thanks")).unwrap(),
        )
    });
    let remote = Arc::new(RemoteBackend::connect(&url, RemoteConfig::default()).unwrap());
    let err = remote_generate(&remote, &ring(64), &text("cat"), 1).unwrap_err();
    assert_eq!(
        err,
        BackendError::Protocol {
            status: 422,
            code: "unsupported".into(),
            message: "no thanks".into()
        }
    );
    assert!(!err.is_retryable());

    let regen = Regenerator::new(remote, GenerationCache::in_memory());
    let results = regen.regenerate_prompt(&prompt(), 2, 0);
    assert!(results.iter().all(|r| matches!(
        r,
        Err(RegenError::Backend {
            source: BackendError::Protocol { .. },
            ..
        })
    )));
    assert!(regen.cache().is_empty());
}

#[test]
fn wrong_size_image_is_rejected() {
    let (url, _h, _s) = scripted(|req| {
        let img = RgbImage::filled(req.height as usize * 2, req.width as usize, [1, 2, 3]);
        (
            200,
            serde_json::to_string(&GenerateResponseBody::new(&img)).unwrap(),
        )
    });
    let remote = RemoteBackend::connect(&url, RemoteConfig::default()).unwrap();
    let err = remote_generate(&remote, &ring(64), &text("cat"), 1).unwrap_err();
    assert_eq!(
        err,
        BackendError::DimensionMismatch {
            want_h: 64,
            want_w: 64,
            got_h: 128,
            got_w: 64
        }
    );
}

#[test]
fn garbage_reply_is_malformed() {
    let (url, _h, _s) = scripted(|_| (200, "{\"image_png\": \"!!!\"}".into()));
    let remote = RemoteBackend::connect(&url, RemoteConfig::default()).unwrap();
    assert!(matches!(
        remote_generate(&remote, &ring(64), &text("cat"), 1),
        Err(BackendError::Malformed(_))
    ));
}

#[test]
fn slow_server_times_out() {
    let (url, _h, _s) = scripted(|_| {
        std::thread::sleep(Duration::from_millis(1500));
        (200, "{}".into())
    });
    let cfg = RemoteConfig {
        timeout: Duration::from_millis(300),
        max_in_flight: 1,
    };
    let remote = RemoteBackend::connect(&url, cfg).unwrap();
    let err = remote_generate(&remote, &ring(64), &text("cat"), 1).unwrap_err();
    assert_eq!(err, BackendError::Timeout);
    assert!(err.is_retryable());
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let cfg = RemoteConfig {
        timeout: Duration::from_secs(2),
        max_in_flight: 1,
    };
    match RemoteBackend::connect(&format!("http://127.0.0.1:{port}"), cfg) {
        Err(e) => assert!(e.is_retryable(), "{e}"),
        Ok(_) => panic!("connected to a closed port"),
    }
}
