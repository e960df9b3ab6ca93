//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

/// What the stub does with one request.
pub enum Reply {
    Json(u16, String),
    /// Close the connection without answering.
    Drop,
}

type Handler = dyn Fn(&[String]) -> Reply + Send + Sync;

/// Minimal HTTP/1.1 server answering `POST /probs` from a closure.
pub struct StubServer {
    pub url: String,
    requests: Arc<Mutex<Vec<Vec<String>>>>,
}

impl StubServer {
    pub fn start(handler: impl Fn(&[String]) -> Reply + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub");
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        let handler: Arc<Handler> = Arc::new(handler);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let (log, handler) = (Arc::clone(&log), Arc::clone(&handler));
                thread::spawn(move || serve(stream, &log, handler.as_ref()));
            }
        });
        Self { url, requests }
    }

    /// Texts of every request received so far, in arrival order.
    pub fn requests(&self) -> Vec<Vec<String>> {
        self.requests.lock().unwrap().clone()
    }
}

fn serve(stream: TcpStream, log: &Mutex<Vec<Vec<String>>>, handler: &Handler) {
    let mut reader = BufReader::new(stream.try_clone().expect("clone stream"));
    let mut length = 0usize;
    let mut path = String::new();
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if path.is_empty() {
            path = l.split_whitespace().nth(1).unwrap_or_default().to_string();
        } else if let Some((k, v)) = l.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    let texts: Vec<String> = serde_json::from_slice::<serde_json::Value>(&body)
        .ok()
        .and_then(|v| serde_json::from_value(v["texts"].clone()).ok())
        .unwrap_or_default();
    log.lock().unwrap().push(texts.clone());
    let (status, body) = match (path.as_str(), handler(&texts)) {
        (_, Reply::Drop) => return,
        ("/probs", Reply::Json(status, body)) => (status, body),
        (_, Reply::Json(..)) => (404, "{}".to_string()),
    };
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.flush();
}

/// `{"probs": rows}` as a JSON string.
pub fn probs_body(rows: &[Vec<f64>]) -> String {
    serde_json::json!({ "probs": rows }).to_string()
}

/// Distributions that encode each text's position so order can be checked:
/// text `"t{i}"` maps to a two-class row whose first entry is `(i + 1) / 1000`.
pub fn indexed_rows(texts: &[String]) -> Vec<Vec<f64>> {
    texts
        .iter()
        .map(|t| {
            let i: f64 = t.trim_start_matches('t').parse().expect("indexed text");
            let p = (i + 1.0) / 1000.0;
            vec![p, 1.0 - p]
        })
        .collect()
}
