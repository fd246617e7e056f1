//! JSON over HTTP. Routes:
//!
//! | method | path                           | body                  | reply                 |
//! |--------|--------------------------------|-----------------------|-----------------------|
//! | GET    | /campaigns                     |                       | `[CampaignSummary]`   |
//! | POST   | /campaigns                     | `CreateRequest`       | 201 `CampaignState`   |
//! | GET    | /campaigns/{id}                |                       | `CampaignState`       |
//! | POST   | /campaigns/{id}/propose        |                       | `CampaignState`       |
//! | POST   | /campaigns/{id}/measurements   | `MeasurementRequest`  | `CampaignState`       |
//! | GET    | /campaigns/{id}/metrics        |                       | `CampaignMetrics`     |
//!
//! Errors reply `{"error": "..."}` with 400 (bad input), 404 (unknown
//! campaign or route), 409 (state conflict) or 500.

use std::io::Read as _;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::Serialize;
use tiny_http::{Header, Method, Request, Response, Server};

use super::service::{CampaignService, CreateRequest, MeasurementRequest};
use crate::error::Error;

/// Largest accepted request body.
pub const MAX_BODY: u64 = 8 << 20;

pub struct Reply {
    pub status: u16,
    pub body: String,
}

fn json<T: Serialize>(status: u16, value: &T) -> Reply {
    match serde_json::to_string(value) {
        Ok(body) => Reply { status, body },
        Err(e) => error_reply(&Error::Json(e)),
    }
}

fn status_of(e: &Error) -> u16 {
    match e {
        Error::NotFound(_) => 404,
        Error::Conflict(_) => 409,
        Error::Io { .. } => 500,
        Error::Core(folde_core::Error::PoolExhausted) => 409,
        _ => 400,
    }
}

fn error_reply(e: &Error) -> Reply {
    let body = serde_json::json!({ "error": e.to_string() }).to_string();
    Reply {
        status: status_of(e),
        body,
    }
}

fn parse<T: serde::de::DeserializeOwned>(body: &str) -> Result<T, Error> {
    serde_json::from_str(body).map_err(|e| Error::Invalid(format!("bad request body: {e}")))
}

/// Dispatches one request; separate from the transport for testing.
pub fn route(service: &CampaignService, method: &str, path: &str, body: &str) -> Reply {
    let path = path.split('?').next().unwrap_or("");
    let parts: Vec<&str> = path.trim_matches('/').split('/').collect();
    let result = match (method, parts.as_slice()) {
        ("GET", ["campaigns"]) => service.list().map(|l| json(200, &l)),
        ("POST", ["campaigns"]) => parse::<CreateRequest>(body)
            .and_then(|r| service.create(r))
            .map(|s| json(201, &s)),
        ("GET", ["campaigns", id]) => service.get(id).map(|s| json(200, &s)),
        ("POST", ["campaigns", id, "propose"]) => service.propose(id).map(|s| json(200, &s)),
        ("POST", ["campaigns", id, "measurements"]) => parse::<MeasurementRequest>(body)
            .and_then(|r| service.record(id, &r.measurements))
            .map(|s| json(200, &s)),
        ("GET", ["campaigns", id, "metrics"]) => service.metrics(id).map(|m| json(200, &m)),
        _ => Err(Error::NotFound(format!("route {method} {path}"))),
    };
    result.unwrap_or_else(|e| error_reply(&e))
}

fn respond(service: &CampaignService, mut request: Request) {
    let method = request.method().clone();
    let url = request.url().to_string();
    let reply = if method == Method::Options {
        Reply {
            status: 204,
            body: String::new(),
        }
    } else {
        let mut body = String::new();
        match request.as_reader().take(MAX_BODY).read_to_string(&mut body) {
            Ok(_) => route(service, method.as_str(), &url, &body),
            Err(e) => error_reply(&Error::Invalid(format!("unreadable body: {e}"))),
        }
    };
    let headers = [
        ("Content-Type", "application/json"),
        ("Access-Control-Allow-Origin", "*"),
        ("Access-Control-Allow-Methods", "GET, POST, OPTIONS"),
        ("Access-Control-Allow-Headers", "Content-Type"),
    ];
    let mut response = Response::from_string(reply.body).with_status_code(reply.status);
    for (k, v) in headers {
        response.add_header(Header::from_bytes(k, v).expect("static header"));
    }
    let _ = request.respond(response);
}

/// A bound server; requests are handled one at a time, so writes to any one
/// campaign are serialized.
pub struct CampaignServer {
    server: Arc<Server>,
    service: CampaignService,
}

impl CampaignServer {
    pub fn bind(service: CampaignService, addr: &str) -> Result<Self, Error> {
        let server = Server::http(addr).map_err(|e| Error::Invalid(format!("cannot bind {addr}: {e}")))?;
        Ok(CampaignServer {
            server: Arc::new(server),
            service,
        })
    }

    pub fn local_addr(&self) -> Option<SocketAddr> {
        self.server.server_addr().to_ip()
    }

    /// Serves until the process exits.
    pub fn run(self) {
        for request in self.server.incoming_requests() {
            respond(&self.service, request);
        }
    }

    /// Serves on a background thread; the handle stops it when dropped.
    pub fn spawn(self) -> ServerHandle {
        let server = Arc::clone(&self.server);
        let addr = self.local_addr();
        let thread = std::thread::spawn(move || self.run());
        ServerHandle {
            server,
            addr,
            thread: Some(thread),
        }
    }
}

pub struct ServerHandle {
    server: Arc<Server>,
    addr: Option<SocketAddr>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> Option<SocketAddr> {
        self.addr
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
