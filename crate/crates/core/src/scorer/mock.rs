use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use tiny_http::{Header, Method, Response, Server};

use super::ScoreItem;
use crate::error::{Error, Result};

const WORKERS: usize = 4;

/// Deterministic pseudo-score in `[0, 1)` derived from the item's text.
pub fn mock_score(item: &ScoreItem) -> f64 {
    let mut h = Sha256::new();
    for part in [item.src.as_deref(), Some(item.hyp.as_str()), item.reference.as_deref()] {
        match part {
            Some(p) => {
                h.update((p.len() as u64).to_le_bytes());
                h.update(p.as_bytes());
            }
            None => h.update([0xff]),
        }
    }
    let digest = h.finalize();
    let bits = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MockBehavior {
    /// Scores from [`mock_score`].
    Hash,
    /// The same score for every item.
    Fixed(f64),
    /// Answers 503 to the first `n` requests, then behaves like `Hash`.
    FailFirst(usize),
    /// Returns one score fewer than requested.
    DropLast,
}

#[derive(Deserialize)]
struct Request {
    items: Vec<ScoreItem>,
}

struct Shared {
    behavior: MockBehavior,
    requests: AtomicUsize,
    items: AtomicUsize,
}

/// In-process scoring server speaking the scorer wire protocol.
pub struct MockScorer {
    server: Arc<Server>,
    shared: Arc<Shared>,
    workers: Vec<JoinHandle<()>>,
    addr: SocketAddr,
}

fn json_header() -> Header {
    Header::from_bytes("Content-Type", "application/json").expect("static header")
}

fn handle(shared: &Shared, mut request: tiny_http::Request) {
    let n = shared.requests.fetch_add(1, Ordering::SeqCst);
    if request.method() != &Method::Post || request.url() != "/score" {
        let _ = request.respond(Response::from_string("not found").with_status_code(404));
        return;
    }
    if let MockBehavior::FailFirst(k) = shared.behavior {
        if n < k {
            let _ = request.respond(Response::from_string("service unavailable").with_status_code(503));
            return;
        }
    }
    let mut body = String::new();
    let parsed = request
        .as_reader()
        .read_to_string(&mut body)
        .ok()
        .and_then(|_| serde_json::from_str::<Request>(&body).ok());
    let Some(parsed) = parsed else {
        let _ = request.respond(Response::from_string("malformed request").with_status_code(400));
        return;
    };
    shared.items.fetch_add(parsed.items.len(), Ordering::SeqCst);
    let mut scores: Vec<f64> = match shared.behavior {
        MockBehavior::Fixed(v) => vec![v; parsed.items.len()],
        _ => parsed.items.iter().map(mock_score).collect(),
    };
    if shared.behavior == MockBehavior::DropLast {
        scores.pop();
    }
    let body = serde_json::json!({ "scores": scores }).to_string();
    let _ = request.respond(Response::from_string(body).with_header(json_header()));
}

impl MockScorer {
    /// Serves on an ephemeral localhost port.
    pub fn start(behavior: MockBehavior) -> Result<Self> {
        Self::bind("127.0.0.1:0", behavior)
    }

    pub fn bind(addr: &str, behavior: MockBehavior) -> Result<Self> {
        let server = Server::http(addr).map_err(|e| Error::ScorerTransport(format!("cannot bind {addr}: {e}")))?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| Error::ScorerTransport("mock scorer bound to a non-IP address".into()))?;
        let server = Arc::new(server);
        let shared = Arc::new(Shared {
            behavior,
            requests: AtomicUsize::new(0),
            items: AtomicUsize::new(0),
        });
        let workers = (0..WORKERS)
            .map(|_| {
                let (server, shared) = (server.clone(), shared.clone());
                std::thread::spawn(move || {
                    while let Ok(request) = server.recv() {
                        handle(&shared, request);
                    }
                })
            })
            .collect();
        Ok(MockScorer { server, shared, workers, addr })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn request_count(&self) -> usize {
        self.shared.requests.load(Ordering::SeqCst)
    }

    /// Items received across all well-formed requests.
    pub fn items_scored(&self) -> usize {
        self.shared.items.load(Ordering::SeqCst)
    }

    /// Blocks until the server stops (it never does on its own).
    pub fn wait(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for MockScorer {
    fn drop(&mut self) {
        for _ in 0..self.workers.len() {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}
