//! Protocol conformance corpus for generation services.
//!
//! Any service implementing the `/v1` protocol should pass every case.
//! When a reference backend with the same backend id is supplied, images
//! must also match it bit for bit.

use serde_json::{json, Value};

use crate::imaging::BitEdgeMap;

/// A well-formed generation request.
#[derive(Clone, Debug)]
pub struct ValidCase {
    pub name: &'static str,
    pub edges: BitEdgeMap,
    pub prompt: &'static str,
    pub seed: u64,
}

/// A request the service must refuse with a 4xx status and an error body.
#[derive(Clone, Debug)]
pub struct InvalidCase {
    pub name: &'static str,
    pub body: Value,
}

fn ring(h: usize, w: usize) -> BitEdgeMap {
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let r = h.min(w) as f64 * 0.3;
    BitEdgeMap::from_fn(h, w, |y, x| {
        let d = ((y as f64 - cy).powi(2) + (x as f64 - cx).powi(2)).sqrt();
        (d - r).abs() < 0.5
    })
}

fn scribble(h: usize, w: usize, salt: u64) -> BitEdgeMap {
    let mut s = salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    BitEdgeMap::from_fn(h, w, |_, _| {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        s.is_multiple_of(9)
    })
}

pub fn valid_cases() -> Vec<ValidCase> {
    vec![
        ValidCase {
            name: "empty-64",
            edges: BitEdgeMap::new(64, 64),
            prompt: "cat",
            seed: 0,
        },
        ValidCase {
            name: "ring-64",
            edges: ring(64, 64),
            prompt: "red triangle",
            seed: 7,
        },
        ValidCase {
            name: "ring-wide",
            edges: ring(64, 128),
            prompt: "train station platform",
            seed: 42,
        },
        ValidCase {
            name: "ring-tall",
            edges: ring(192, 64),
            prompt: "apple pie",
            seed: 1 << 40,
        },
        ValidCase {
            name: "scribble-128",
            edges: scribble(128, 128, 3),
            prompt: "electric guitar",
            seed: 99,
        },
        ValidCase {
            name: "max-seed",
            edges: ring(64, 64),
            prompt: "indoor general store",
            seed: u64::MAX,
        },
        ValidCase {
            name: "apostrophe",
            edges: scribble(64, 64, 5),
            prompt: "baker's shop",
            seed: 12345,
        },
        ValidCase {
            name: "full",
            edges: BitEdgeMap::from_fn(64, 64, |_, _| true),
            prompt: "cat",
            seed: 8,
        },
    ]
}

pub fn invalid_cases() -> Vec<InvalidCase> {
    let good = super::protocol::GenerateRequestBody::new(&ring(64, 64), "cat", 1);
    let good = serde_json::to_value(good).expect("serializable");
    let with = |field: &str, v: Value| {
        let mut b = good.clone();
        b[field] = v;
        b
    };
    let without = |field: &str| {
        let mut b = good.clone();
        b.as_object_mut().unwrap().remove(field);
        b
    };
    vec![
        InvalidCase {
            name: "missing-edges",
            body: without("edges_png"),
        },
        InvalidCase {
            name: "missing-seed",
            body: without("seed"),
        },
        InvalidCase {
            name: "bad-base64",
            body: with("edges_png", json!("***not base64***")),
        },
        InvalidCase {
            name: "not-png",
            body: with("edges_png", json!("aGVsbG8gd29ybGQ=")),
        },
        InvalidCase {
            name: "size-mismatch",
            body: with("width", json!(128)),
        },
        InvalidCase {
            name: "not-multiple-of-64",
            body: with("height", json!(60)),
        },
        InvalidCase {
            name: "zero-size",
            body: with("width", json!(0)),
        },
        InvalidCase {
            name: "empty-prompt",
            body: with("prompt", json!("")),
        },
        InvalidCase {
            name: "negative-seed",
            body: with("seed", json!(-1)),
        },
        InvalidCase {
            name: "not-an-object",
            body: json!([1, 2, 3]),
        },
    ]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConformanceReport {
    pub backend_id: String,
    pub cases: Vec<CaseResult>,
}

impl ConformanceReport {
    pub fn passed(&self) -> usize {
        self.cases.iter().filter(|c| c.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        !self.cases.is_empty() && self.cases.iter().all(|c| c.passed)
    }
}

impl std::fmt::Display for ConformanceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "backend {}: {}/{} cases passed",
            self.backend_id,
            self.passed(),
            self.cases.len()
        )?;
        for c in &self.cases {
            writeln!(
                f,
                "  [{}] {} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

#[cfg(feature = "remote")]
pub use runner::run_conformance;

#[cfg(feature = "remote")]
mod runner {
    use super::*;
    use crate::prompts::TextualPrompt;
    use crate::regen::protocol::{ErrorBody, HealthBody, GENERATE_PATH, HEALTH_PATH};
    use crate::regen::{remote_generate, GenerationBackend, RemoteBackend, RemoteConfig};

    fn result(name: &str, outcome: Result<String, String>) -> CaseResult {
        match outcome {
            Ok(detail) => CaseResult {
                name: name.into(),
                passed: true,
                detail,
            },
            Err(detail) => CaseResult {
                name: name.into(),
                passed: false,
                detail,
            },
        }
    }

    /// Runs the whole corpus against the service at `endpoint`.
    pub fn run_conformance(
        endpoint: &str,
        reference: Option<&dyn GenerationBackend>,
    ) -> Result<ConformanceReport, crate::regen::BackendError> {
        let remote = RemoteBackend::connect(endpoint, RemoteConfig::default())?;
        let backend_id = remote.descriptor().identifier.clone();
        let mut cases = Vec::new();

        cases.push(result(
            "health",
            remote
                .get_raw(HEALTH_PATH)
                .map_err(|e| e.to_string())
                .and_then(|(status, text)| {
                    let body: HealthBody =
                        serde_json::from_str(&text).map_err(|e| e.to_string())?;
                    if status == 200 && !body.backend_id.is_empty() {
                        Ok(body.backend_id)
                    } else {
                        Err(format!("status {status}, backend_id {:?}", body.backend_id))
                    }
                }),
        ));

        let reference = reference.filter(|r| r.descriptor().identifier == backend_id);
        for case in valid_cases() {
            let text = TextualPrompt::parse(case.prompt).expect("corpus prompts are normalized");
            let outcome = (|| {
                let a = remote_generate(&remote, &case.edges, &text, case.seed)
                    .map_err(|e| e.to_string())?;
                let b = remote_generate(&remote, &case.edges, &text, case.seed)
                    .map_err(|e| e.to_string())?;
                if a != b {
                    return Err("two identical requests returned different images".to_string());
                }
                if let Some(r) = reference {
                    let expect = r
                        .generate_raw(&case.edges, &text, case.seed)
                        .map_err(|e| e.to_string())?;
                    if expect != a {
                        return Err("image differs from the reference backend".to_string());
                    }
                    return Ok(format!("{}x{} matches reference", a.height(), a.width()));
                }
                Ok(format!("{}x{} deterministic", a.height(), a.width()))
            })();
            cases.push(result(case.name, outcome));
        }

        for case in invalid_cases() {
            let outcome = remote
                .post_raw(GENERATE_PATH, &case.body)
                .map_err(|e| e.to_string())
                .and_then(|(status, text)| {
                    let parsed = serde_json::from_str::<ErrorBody>(&text);
                    match ((400..500).contains(&status), parsed) {
                        (true, Ok(body)) => Ok(format!("{status} {}", body.error.code)),
                        (_, parsed) => Err(format!(
                            "status {status}, error body parsed: {}",
                            parsed.is_ok()
                        )),
                    }
                });
            cases.push(result(case.name, outcome));
        }

        let outcome = remote
            .get_raw("/v1/nope")
            .map_err(|e| e.to_string())
            .and_then(
                |(status, text)| match (status, serde_json::from_str::<ErrorBody>(&text)) {
                    (404, Ok(_)) => Ok("404".into()),
                    (s, _) => Err(format!("status {s}")),
                },
            );
        cases.push(result("unknown-route", outcome));

        Ok(ConformanceReport { backend_id, cases })
    }
}
