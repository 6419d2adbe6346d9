//! In-process annealer service for tests and demos.
//!
//! Serves the solve protocol on `127.0.0.1` with an OS-assigned port and
//! answers by delegating to the local exhaustive or annealing solver.

use std::sync::Arc;
use std::thread::JoinHandle;

use tiny_http::{Header, Method, Response, Server};

use super::{
    solve_exhaustive, solve_sa, AnnealSchedule, IsingProblem, SolveRequest, SolveResponse,
    SOLVE_PATH,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MockBackend {
    Exhaustive,
    Anneal { sweeps: usize },
}

/// What the server does to an otherwise correct answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockBehavior {
    Honest,
    /// Adds 1.0 to every reported energy.
    CorruptEnergies,
    /// Replies with a body that is not a solve response.
    MalformedBody,
}

pub struct MockServer {
    server: Arc<Server>,
    url: String,
    worker: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(backend: MockBackend, behavior: MockBehavior) -> Result<Self> {
        Self::bind("127.0.0.1:0", backend, behavior)
    }

    pub fn bind(addr: &str, backend: MockBackend, behavior: MockBehavior) -> Result<Self> {
        let server = Server::http(addr).map_err(|e| Error::Transport {
            endpoint: addr.to_string(),
            message: e.to_string(),
        })?;
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| Error::Transport {
                endpoint: addr.to_string(),
                message: "server is not bound to an IP socket".into(),
            })?;
        let host = addr.rsplit_once(':').map_or("127.0.0.1", |(h, _)| h);
        let server = Arc::new(server);
        let worker = {
            let server = Arc::clone(&server);
            std::thread::spawn(move || serve(&server, backend, behavior))
        };
        Ok(Self {
            server,
            url: format!("http://{host}:{port}"),
            worker: Some(worker),
        })
    }

    /// Base URL to pass to [`super::solve_remote`].
    pub fn url(&self) -> &str {
        &self.url
    }

    /// Blocks until the server is shut down from another thread.
    pub fn join(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn serve(server: &Server, backend: MockBackend, behavior: MockBehavior) {
    for mut request in server.incoming_requests() {
        let (status, body) = if request.method() != &Method::Post || request.url() != SOLVE_PATH {
            (404, format!("{{\"error\": \"no route for {}\"}}", request.url()))
        } else {
            let mut text = String::new();
            match request.as_reader().read_to_string(&mut text) {
                Ok(_) => match answer(&text, backend, behavior) {
                    Ok(body) => (200, body),
                    Err(e) => (400, serde_json::json!({ "error": e.to_string() }).to_string()),
                },
                Err(e) => (400, serde_json::json!({ "error": e.to_string() }).to_string()),
            }
        };
        let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
        let _ = request.respond(
            Response::from_string(body)
                .with_status_code(status)
                .with_header(header),
        );
    }
}

fn answer(text: &str, backend: MockBackend, behavior: MockBehavior) -> Result<String> {
    let req: SolveRequest =
        serde_json::from_str(text).map_err(|e| Error::MalformedResponse(e.to_string()))?;
    let problem = IsingProblem::new(req.size, req.couplings)?;
    let set = match backend {
        MockBackend::Exhaustive => solve_exhaustive(&problem)?,
        MockBackend::Anneal { sweeps } => solve_sa(
            &problem,
            &AnnealSchedule {
                sweeps,
                reads: req.num_reads.max(1),
                seed: req.seed.unwrap_or(0),
                ..AnnealSchedule::default()
            },
        )?,
    };
    let mut response = SolveResponse::from(&set);
    match behavior {
        MockBehavior::Honest => {}
        MockBehavior::CorruptEnergies => {
            for e in &mut response.energies {
                *e += 1.0;
            }
        }
        MockBehavior::MalformedBody => return Ok("{\"samples\": \"oops\"}".to_string()),
    }
    serde_json::to_string(&response).map_err(|e| Error::Serialization(e.to_string()))
}
