//! In-process stand-in for a remote classification service.
//!
//! Speaks just enough HTTP/1.1 for the wire contract: `POST /v1/classify`
//! and `GET /v1/health`, one connection per request. Every request is
//! counted, including ones the handler answers late or with an error.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use super::ClassifyRequest;

/// What the stub sends back for one request.
#[derive(Debug, Clone, PartialEq)]
pub struct StubReply {
    pub status: u16,
    pub body: String,
    /// Sleep before answering.
    pub delay: Duration,
}

impl StubReply {
    pub fn json(status: u16, body: impl Into<String>) -> Self {
        StubReply {
            status,
            body: body.into(),
            delay: Duration::ZERO,
        }
    }

    /// Labels with one-hot scores.
    pub fn labels(labels: &[usize], classes: usize) -> Self {
        let scores: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| (0..classes).map(|k| if k == l { 1.0 } else { 0.0 }).collect())
            .collect();
        let body = serde_json::json!({"labels": labels, "scores": scores});
        StubReply::json(200, body.to_string())
    }

    pub fn error(status: u16, message: &str) -> Self {
        StubReply::json(status, serde_json::json!({"error": message, "code": status}).to_string())
    }

    pub fn delayed(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

type Handler = dyn Fn(usize, &ClassifyRequest) -> StubReply + Send + Sync;

pub struct StubServer {
    addr: SocketAddr,
    requests: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl StubServer {
    /// Serves `handler(request_index, request)` on an ephemeral local port.
    pub fn start<F>(handler: F) -> std::io::Result<Self>
    where
        F: Fn(usize, &ClassifyRequest) -> StubReply + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let requests = Arc::new(AtomicUsize::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let handler: Arc<Handler> = Arc::new(handler);
        let (req, st) = (requests.clone(), stop.clone());
        let accept = std::thread::spawn(move || {
            for conn in listener.incoming() {
                if st.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                let (h, r) = (handler.clone(), req.clone());
                std::thread::spawn(move || {
                    let _ = serve(stream, &*h, &r);
                });
            }
        });
        Ok(StubServer {
            addr,
            requests,
            stop,
            accept: Some(accept),
        })
    }

    /// Labels every text with `label(task, text)`.
    pub fn per_text<F>(classes: usize, label: F) -> std::io::Result<Self>
    where
        F: Fn(&str, &str) -> usize + Send + Sync + 'static,
    {
        Self::start(move |_, req| {
            let labels: Vec<usize> = req.texts.iter().map(|t| label(&req.task, t)).collect();
            StubReply::labels(&labels, classes)
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Classify requests received so far.
    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

fn serve(stream: TcpStream, handler: &Handler, counter: &AtomicUsize) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line)? == 0 {
        return Ok(());
    }
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;

    let reply = if request_line.starts_with("GET /v1/health") {
        StubReply::json(200, r#"{"status":"ok","tasks":[]}"#)
    } else if request_line.starts_with("POST") && request_line.contains("/v1/classify") {
        let n = counter.fetch_add(1, Ordering::SeqCst);
        match serde_json::from_slice::<ClassifyRequest>(&body) {
            Ok(req) => handler(n, &req),
            Err(e) => StubReply::error(400, &e.to_string()),
        }
    } else {
        StubReply::error(404, "not found")
    };
    std::thread::sleep(reply.delay);
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        reply.body.len(),
        reply.body
    )?;
    stream.flush()
}
