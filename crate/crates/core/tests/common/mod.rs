#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

pub struct Request {
    pub method: String,
    pub path: String,
    pub body: String,
}

pub struct Reply {
    pub status: u16,
    pub body: String,
}

impl Reply {
    pub fn json(v: Value) -> Reply {
        Reply {
            status: 200,
            body: v.to_string(),
        }
    }

    pub fn status(status: u16, body: &str) -> Reply {
        Reply {
            status,
            body: body.to_owned(),
        }
    }
}

type Handler = dyn Fn(&Request) -> Reply + Send + Sync;

/// Minimal HTTP/1.1 server running `handler` on a thread per connection.
pub struct Stub {
    pub url: String,
    pub requests: Arc<Mutex<Vec<(String, String, String)>>>,
    pub peak_in_flight: Arc<AtomicUsize>,
}

fn read_request(stream: &mut TcpStream) -> Option<Request> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let mut parts = line.split_whitespace();
    let method = parts.next()?.to_owned();
    let path = parts.next()?.to_owned();
    let mut content_length = 0usize;
    let mut chunked = false;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        let (name, value) = h.split_once(':')?;
        let value = value.trim();
        match name.to_ascii_lowercase().as_str() {
            "content-length" => content_length = value.parse().ok()?,
            "transfer-encoding" => chunked = value.eq_ignore_ascii_case("chunked"),
            _ => {}
        }
    }
    let mut body = Vec::new();
    if chunked {
        loop {
            let mut size = String::new();
            reader.read_line(&mut size).ok()?;
            let n = usize::from_str_radix(size.trim(), 16).ok()?;
            let mut chunk = vec![0; n + 2];
            reader.read_exact(&mut chunk).ok()?;
            if n == 0 {
                break;
            }
            body.extend_from_slice(&chunk[..n]);
        }
    } else {
        body.resize(content_length, 0);
        reader.read_exact(&mut body).ok()?;
    }
    Some(Request {
        method,
        path,
        body: String::from_utf8(body).ok()?,
    })
}

impl Stub {
    pub fn start<F>(handler: F) -> Stub
    where
        F: Fn(&Request) -> Reply + Send + Sync + 'static,
    {
        Self::start_with_delay(handler, Duration::ZERO)
    }

    pub fn start_with_delay<F>(handler: F, delay: Duration) -> Stub
    where
        F: Fn(&Request) -> Reply + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let handler: Arc<Handler> = Arc::new(handler);
        let requests = Arc::new(Mutex::new(Vec::new()));
        let in_flight = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let (reqs, peak2) = (requests.clone(), peak.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { break };
                let (handler, reqs, in_flight, peak) =
                    (handler.clone(), reqs.clone(), in_flight.clone(), peak2.clone());
                thread::spawn(move || {
                    let Some(req) = read_request(&mut stream) else { return };
                    let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    thread::sleep(delay);
                    reqs.lock()
                        .unwrap()
                        .push((req.method.clone(), req.path.clone(), req.body.clone()));
                    let reply = handler(&req);
                    in_flight.fetch_sub(1, Ordering::SeqCst);
                    let text = format!(
                        "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                        reply.status,
                        reply.body.len(),
                        reply.body
                    );
                    let _ = stream.write_all(text.as_bytes());
                    let _ = stream.flush();
                });
            }
        });
        Stub {
            url,
            requests,
            peak_in_flight: peak,
        }
    }

    pub fn bodies(&self, path: &str) -> Vec<Value> {
        self.requests
            .lock()
            .unwrap()
            .iter()
            .filter(|(_, p, _)| p == path)
            .map(|(_, _, b)| serde_json::from_str(b).unwrap())
            .collect()
    }
}

/// Reference behaviour of the service with no model behind it: masks are
/// filled with a fixed token, predictions flag tokens absent from the source.
pub fn reference_handler(req: &Request) -> Reply {
    match (req.method.as_str(), req.path.as_str()) {
        ("GET", "/health") => Reply::json(json!({ "ready": true })),
        ("POST", "/infill") => {
            let v: Value = serde_json::from_str(&req.body).unwrap();
            let tokens: Vec<String> = v["tokens"]
                .as_array()
                .unwrap()
                .iter()
                .map(|t| t.as_str().unwrap())
                .map(|t| {
                    if t == "<mask>" {
                        "filled".to_owned()
                    } else {
                        t.to_owned()
                    }
                })
                .collect();
            Reply::json(json!({ "tokens": tokens }))
        }
        ("POST", "/predict") => {
            let v: Value = serde_json::from_str(&req.body).unwrap();
            let source: Vec<&str> = v["source"].as_str().unwrap().split_whitespace().collect();
            let probs: Vec<f64> = v["target"]
                .as_str()
                .unwrap()
                .split_whitespace()
                .map(|t| if source.contains(&t) { 0.1 } else { 0.9 })
                .collect();
            Reply::json(json!({ "probs": probs }))
        }
        _ => Reply::status(404, "{}"),
    }
}
