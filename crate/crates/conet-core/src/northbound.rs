//! The controller's management interface: plain HTTP/1.1 plus JSON.
//!
//! Routes:
//!
//! ```text
//! GET  /icn/caches/{id}/contents   cached (name, csn) pairs per cache
//! POST /icn/mode                   {"mode":"caching"|"mac_learning"}
//! GET  /icn/stats/interests        per-name request counters
//! POST /icn/caches/{id}/push       {"name","csn","content_b64"}
//! GET  /topology                   declared nodes and links
//! GET  /switches/{id}/flows        live flow-table dump
//! ```
//!
//! `dispatch` is pure request-in/response-out against a backend; the HTTP
//! listener is a thin adapter that forwards requests over a channel into
//! whatever owns the backend (the simulator's serialized command stream).

use serde_json::{json, Value};

use crate::naming::ContentName;
use crate::nrs::{ControllerMode, NrsError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NbRequest {
    pub method: String,
    pub path: String,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NbResponse {
    pub status: u16,
    pub body: Value,
}

impl NbResponse {
    fn ok(body: Value) -> Self {
        Self { status: 200, body }
    }

    fn error(status: u16, msg: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": msg.into() }),
        }
    }
}

/// State the interface exposes; implemented by the simulation harness.
pub trait NorthboundBackend {
    fn cache_contents(&self, cache: &str) -> Option<Vec<(ContentName, u64)>>;
    fn mode(&self) -> ControllerMode;
    fn set_mode(&mut self, mode: ControllerMode) -> (ControllerMode, ControllerMode);
    fn interest_stats(&self) -> Vec<(String, u64)>;
    fn push_chunk(
        &mut self,
        cache: &str,
        name: ContentName,
        csn: u64,
        content: Vec<u8>,
    ) -> Result<(), NrsError>;
    fn topology_view(&self) -> Value;
    fn switch_flows(&self, id: &str) -> Option<Value>;
}

pub fn dispatch<B: NorthboundBackend>(backend: &mut B, req: &NbRequest) -> NbResponse {
    let segments: Vec<&str> = req.path.split('/').filter(|s| !s.is_empty()).collect();
    match (req.method.as_str(), segments.as_slice()) {
        ("GET", ["icn", "caches", id, "contents"]) => match backend.cache_contents(id) {
            Some(contents) => NbResponse::ok(Value::Array(
                contents
                    .into_iter()
                    .map(|(name, csn)| json!({ "name": name.as_str(), "csn": csn }))
                    .collect(),
            )),
            None => NbResponse::error(404, format!("unknown cache {id}")),
        },
        ("POST", ["icn", "mode"]) => {
            let Ok(body) = serde_json::from_slice::<Value>(&req.body) else {
                return NbResponse::error(400, "body is not JSON");
            };
            let Some(mode) = body.get("mode").and_then(Value::as_str) else {
                return NbResponse::error(400, "missing mode field");
            };
            let Some(mode) = ControllerMode::parse(mode) else {
                return NbResponse::error(400, format!("unknown mode {mode:?}"));
            };
            let (previous, current) = backend.set_mode(mode);
            NbResponse::ok(json!({ "previous": previous.as_str(), "mode": current.as_str() }))
        }
        ("GET", ["icn", "mode"]) => NbResponse::ok(json!({ "mode": backend.mode().as_str() })),
        ("GET", ["icn", "stats", "interests"]) => {
            let mut map = serde_json::Map::new();
            for (name, count) in backend.interest_stats() {
                map.insert(name, json!(count));
            }
            NbResponse::ok(Value::Object(map))
        }
        ("POST", ["icn", "caches", id, "push"]) => {
            let Ok(body) = serde_json::from_slice::<Value>(&req.body) else {
                return NbResponse::error(400, "body is not JSON");
            };
            let name = body.get("name").and_then(Value::as_str);
            let csn = body.get("csn").and_then(Value::as_u64);
            let content = body.get("content_b64").and_then(Value::as_str);
            let (Some(name), Some(csn), Some(content)) = (name, csn, content) else {
                return NbResponse::error(400, "need name, csn, and content_b64");
            };
            let Ok(name) = ContentName::parse(name) else {
                return NbResponse::error(400, "malformed content name");
            };
            let Ok(content) = base64_decode(content) else {
                return NbResponse::error(400, "content_b64 is not valid base64");
            };
            if content.is_empty() {
                return NbResponse::error(400, "content is empty");
            }
            match backend.push_chunk(id, name, csn, content) {
                Ok(()) => NbResponse::ok(json!({ "pushed": true })),
                Err(NrsError::UnknownCache(id)) => {
                    NbResponse::error(404, format!("unknown cache {id}"))
                }
                Err(e) => NbResponse::error(500, e.to_string()),
            }
        }
        ("GET", ["topology"]) => NbResponse::ok(backend.topology_view()),
        ("GET", ["switches", id, "flows"]) => match backend.switch_flows(id) {
            Some(flows) => NbResponse::ok(flows),
            None => NbResponse::error(404, format!("unknown switch {id}")),
        },
        (_, ["icn", ..]) | (_, ["topology"]) | (_, ["switches", ..]) => {
            NbResponse::error(405, "method not allowed")
        }
        _ => NbResponse::error(404, "no such route"),
    }
}

fn base64_decode(s: &str) -> Result<Vec<u8>, base64::DecodeError> {
    use base64::prelude::*;
    BASE64_STANDARD.decode(s.as_bytes())
}

/// Requests forwarded from the HTTP listener into the owning event loop.
pub type CommandSender = std::sync::mpsc::Sender<(NbRequest, std::sync::mpsc::Sender<NbResponse>)>;

/// Starts the HTTP listener on `addr`, forwarding every request through
/// `commands`. Returns the bound address. The listener thread exits when
/// the command channel's receiving side is dropped and a request arrives.
pub fn start_http(addr: &str, commands: CommandSender) -> std::io::Result<std::net::SocketAddr> {
    let server = tiny_http::Server::http(addr)
        .map_err(|e| std::io::Error::other(format!("bind {addr}: {e}")))?;
    let bound = match server.server_addr() {
        tiny_http::ListenAddr::IP(a) => a,
        other => {
            return Err(std::io::Error::other(format!(
                "unexpected listener {other:?}"
            )))
        }
    };
    std::thread::spawn(move || {
        for mut http_req in server.incoming_requests() {
            let mut body = Vec::new();
            let _ = std::io::Read::read_to_end(http_req.as_reader(), &mut body);
            let req = NbRequest {
                method: http_req.method().as_str().to_owned(),
                path: http_req.url().to_owned(),
                body,
            };
            let (reply_tx, reply_rx) = std::sync::mpsc::channel();
            if commands.send((req, reply_tx)).is_err() {
                let _ = http_req.respond(plain_response(503, &json!({"error": "shutting down"})));
                break;
            }
            let response = match reply_rx.recv() {
                Ok(res) => plain_response(res.status, &res.body),
                Err(_) => plain_response(503, &json!({"error": "shutting down"})),
            };
            let _ = http_req.respond(response);
        }
    });
    Ok(bound)
}

fn plain_response(status: u16, body: &Value) -> tiny_http::Response<std::io::Cursor<Vec<u8>>> {
    let bytes = serde_json::to_vec(body).expect("json serializes");
    tiny_http::Response::from_data(bytes)
        .with_status_code(status)
        .with_header(
            tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
                .expect("static header is valid"),
        )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    /// Minimal fake backend for route-level tests; the end-to-end behavior
    /// is covered against the real simulator in the integration suite.
    struct FakeBackend {
        mode: ControllerMode,
        caches: BTreeMap<String, Vec<(ContentName, u64)>>,
        stats: Vec<(String, u64)>,
        pushes: Vec<(String, String, u64, usize)>,
    }

    impl FakeBackend {
        fn new() -> Self {
            let mut caches = BTreeMap::new();
            caches.insert(
                "cache0".to_string(),
                vec![(ContentName::parse("foo.com/a").unwrap(), 0)],
            );
            Self {
                mode: ControllerMode::MacLearning,
                caches,
                stats: vec![("foo.com/a".into(), 5)],
                pushes: Vec::new(),
            }
        }
    }

    impl NorthboundBackend for FakeBackend {
        fn cache_contents(&self, cache: &str) -> Option<Vec<(ContentName, u64)>> {
            self.caches.get(cache).cloned()
        }

        fn mode(&self) -> ControllerMode {
            self.mode
        }

        fn set_mode(&mut self, mode: ControllerMode) -> (ControllerMode, ControllerMode) {
            let prev = self.mode;
            self.mode = mode;
            (prev, mode)
        }

        fn interest_stats(&self) -> Vec<(String, u64)> {
            self.stats.clone()
        }

        fn push_chunk(
            &mut self,
            cache: &str,
            name: ContentName,
            csn: u64,
            content: Vec<u8>,
        ) -> Result<(), NrsError> {
            if !self.caches.contains_key(cache) {
                return Err(NrsError::UnknownCache(cache.to_string()));
            }
            self.pushes
                .push((cache.into(), name.as_str().into(), csn, content.len()));
            Ok(())
        }

        fn topology_view(&self) -> Value {
            json!({ "switches": ["sw1", "sw2"] })
        }

        fn switch_flows(&self, id: &str) -> Option<Value> {
            (id == "sw1").then(|| json!([]))
        }
    }

    fn get(path: &str) -> NbRequest {
        NbRequest {
            method: "GET".into(),
            path: path.into(),
            body: Vec::new(),
        }
    }

    fn post(path: &str, body: Value) -> NbRequest {
        NbRequest {
            method: "POST".into(),
            path: path.into(),
            body: serde_json::to_vec(&body).unwrap(),
        }
    }

    #[test]
    fn cache_contents_route() {
        let mut b = FakeBackend::new();
        let res = dispatch(&mut b, &get("/icn/caches/cache0/contents"));
        assert_eq!(res.status, 200);
        assert_eq!(res.body, json!([{ "name": "foo.com/a", "csn": 0 }]));
        assert_eq!(
            dispatch(&mut b, &get("/icn/caches/nope/contents")).status,
            404
        );
    }

    #[test]
    fn mode_route_reports_previous_and_new() {
        let mut b = FakeBackend::new();
        let res = dispatch(&mut b, &post("/icn/mode", json!({ "mode": "caching" })));
        assert_eq!(res.status, 200);
        assert_eq!(
            res.body,
            json!({ "previous": "mac_learning", "mode": "caching" })
        );
        // Idempotent repeat: previous equals new.
        let res = dispatch(&mut b, &post("/icn/mode", json!({ "mode": "caching" })));
        assert_eq!(
            res.body,
            json!({ "previous": "caching", "mode": "caching" })
        );
        // Invalid mode string.
        let res = dispatch(&mut b, &post("/icn/mode", json!({ "mode": "warp" })));
        assert_eq!(res.status, 400);
    }

    #[test]
    fn stats_route() {
        let mut b = FakeBackend::new();
        let res = dispatch(&mut b, &get("/icn/stats/interests"));
        assert_eq!(res.body, json!({ "foo.com/a": 5 }));
    }

    #[test]
    fn push_route_validates_and_forwards() {
        let mut b = FakeBackend::new();
        let body = json!({ "name": "foo.com/x", "csn": 2, "content_b64": "aGVsbG8=" });
        let res = dispatch(&mut b, &post("/icn/caches/cache0/push", body.clone()));
        assert_eq!(res.status, 200);
        assert_eq!(b.pushes, vec![("cache0".into(), "foo.com/x".into(), 2, 5)]);
        assert_eq!(
            dispatch(&mut b, &post("/icn/caches/ghost/push", body)).status,
            404
        );
        let res = dispatch(
            &mut b,
            &post(
                "/icn/caches/cache0/push",
                json!({ "name": "foo.com/x", "csn": 0, "content_b64": "!!" }),
            ),
        );
        assert_eq!(res.status, 400);
    }

    #[test]
    fn topology_and_flows_routes() {
        let mut b = FakeBackend::new();
        assert_eq!(dispatch(&mut b, &get("/topology")).status, 200);
        assert_eq!(dispatch(&mut b, &get("/switches/sw1/flows")).status, 200);
        assert_eq!(dispatch(&mut b, &get("/switches/zz/flows")).status, 404);
    }

    #[test]
    fn unknown_routes_and_methods() {
        let mut b = FakeBackend::new();
        assert_eq!(dispatch(&mut b, &get("/nope")).status, 404);
        assert_eq!(dispatch(&mut b, &post("/topology", json!({}))).status, 405);
        assert_eq!(dispatch(&mut b, &get("/icn/mode")).status, 200);
    }
}
