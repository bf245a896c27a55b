//! HTTP front end of a mock service.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use tiny_http::{Header, Method, Response, Server};

use super::engine::{LoggedRequest, MockEngine, MockReply};
use super::spec::{SpecError, SutSpec};

/// A mock bound to `127.0.0.1` on an ephemeral port.
///
/// Routes: `POST /graphql`, `GET /coverage` (units hit since the last GET),
/// `GET /coverage/units` (every unit) and `GET /log` (requests received).
/// The server stops when dropped.
pub struct MockServer {
    port: u16,
    engine: Arc<Mutex<MockEngine>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(spec: SutSpec) -> Result<Self, SpecError> {
        let engine = Arc::new(Mutex::new(MockEngine::new(spec)?));
        let server = Server::http("127.0.0.1:0").expect("bind loopback");
        let port = server
            .server_addr()
            .to_ip()
            .expect("tcp listener")
            .port();
        let stop = Arc::new(AtomicBool::new(false));
        let handle = {
            let engine = Arc::clone(&engine);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || serve(server, engine, stop))
        };
        Ok(MockServer {
            port,
            engine,
            stop,
            handle: Some(handle),
        })
    }

    pub fn port(&self) -> u16 {
        self.port
    }

    pub fn base_url(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    pub fn graphql_url(&self) -> String {
        format!("{}/graphql", self.base_url())
    }

    pub fn coverage_url(&self) -> String {
        format!("{}/coverage", self.base_url())
    }

    pub fn log(&self) -> Vec<LoggedRequest> {
        lock(&self.engine).log().to_vec()
    }

    pub fn shutdown(mut self) {
        self.stop_thread();
    }

    fn stop_thread(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop_thread();
    }
}

fn lock(engine: &Mutex<MockEngine>) -> std::sync::MutexGuard<'_, MockEngine> {
    engine.lock().unwrap_or_else(|e| e.into_inner())
}

fn serve(server: Server, engine: Arc<Mutex<MockEngine>>, stop: Arc<AtomicBool>) {
    while !stop.load(Ordering::SeqCst) {
        let mut req = match server.recv_timeout(Duration::from_millis(50)) {
            Ok(Some(r)) => r,
            Ok(None) => continue,
            Err(_) => break,
        };
        let mut body = Vec::new();
        let _ = req.as_reader().read_to_end(&mut body);
        let path = req.url().split('?').next().unwrap_or("").to_string();
        let reply = {
            let mut engine = lock(&engine);
            engine.record(LoggedRequest {
                method: req.method().to_string(),
                path: path.clone(),
                headers: req
                    .headers()
                    .iter()
                    .map(|h| (h.field.to_string(), h.value.to_string()))
                    .collect(),
                body: String::from_utf8_lossy(&body).into_owned(),
            });
            route(&mut engine, req.method(), &path, &body)
        };
        let header = Header::from_bytes("Content-Type", reply.content_type.as_bytes())
            .expect("valid header");
        let response = Response::from_string(reply.body)
            .with_status_code(reply.status)
            .with_header(header);
        let _ = req.respond(response);
    }
}

fn json_reply(value: serde_json::Value) -> MockReply {
    MockReply {
        status: 200,
        content_type: "application/json".into(),
        body: value.to_string(),
    }
}

fn route(engine: &mut MockEngine, method: &Method, path: &str, body: &[u8]) -> MockReply {
    match (method, path.trim_end_matches('/')) {
        (Method::Post, "/graphql") => engine.handle_graphql(body),
        (Method::Get, "/coverage") => json_reply(serde_json::json!(engine.poll_coverage())),
        (Method::Get, "/coverage/units") => json_reply(serde_json::json!(engine.known_units())),
        (Method::Get, "/log") => json_reply(serde_json::json!(engine.log())),
        _ => MockReply {
            status: 404,
            content_type: "text/plain".into(),
            body: "not found".into(),
        },
    }
}
