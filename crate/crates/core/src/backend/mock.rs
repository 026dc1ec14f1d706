//! A tiny OpenAI-compatible HTTP server for tests and offline demos.
//!
//! `/completions` tokenizes the prompt per Unicode character and returns a
//! deterministic logprob per character; `/chat/completions` echoes the user
//! message back. One connection is served at a time with `Connection: close`.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockMode {
    Normal,
    /// Every request gets this status with a plain-text body.
    FailWith(u16),
    /// Completions come back with `"logprobs": null`.
    NoLogprobs,
}

/// Logprob the mock assigns to character `c`: a value in [−1.3, −0.1]
/// determined by the code point.
pub fn mock_char_logprob(c: char) -> f64 {
    -(0.1 + f64::from(u32::from(c) % 13) * 0.1)
}

pub struct MockServer {
    addr: SocketAddr,
    requests: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(mode: MockMode) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let requests = Arc::new(AtomicUsize::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let (r, s) = (requests.clone(), stop.clone());
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if s.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                r.fetch_add(1, Ordering::SeqCst);
                // A broken client connection only affects that request.
                let _ = serve(stream, mode);
            }
        });
        Ok(Self { addr, requests, stop, handle: Some(handle) })
    }

    /// Base URL including the `/v1` prefix.
    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the accept loop so it sees the flag.
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(stream: TcpStream, mode: MockMode) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let path = request_line.split_whitespace().nth(1).unwrap_or("").to_string();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" || line == "\n" {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;

    let (status, payload) = respond(&path, &body, mode);
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        _ => "Error",
    };
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        payload.len()
    )?;
    out.write_all(payload.as_bytes())?;
    out.flush()
}

fn respond(path: &str, body: &[u8], mode: MockMode) -> (u16, String) {
    if let MockMode::FailWith(code) = mode {
        return (code, "mock failure".into());
    }
    let Ok(req) = serde_json::from_slice::<Value>(body) else {
        return (400, json!({"error": "body is not JSON"}).to_string());
    };
    if path.ends_with("/chat/completions") {
        let content = req.pointer("/messages/0/content").and_then(Value::as_str).unwrap_or("");
        let v = json!({
            "object": "chat.completion",
            "model": req["model"],
            "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
        });
        return (200, v.to_string());
    }
    if path.ends_with("/completions") {
        let prompt = req["prompt"].as_str().unwrap_or("");
        if mode == MockMode::NoLogprobs {
            let v = json!({"choices": [{"index": 0, "text": "", "logprobs": null}]});
            return (200, v.to_string());
        }
        let chars: Vec<char> = prompt.chars().collect();
        let tokens: Vec<String> = chars.iter().map(|c| c.to_string()).collect();
        let offsets: Vec<usize> = (0..chars.len()).collect();
        let lps: Vec<Value> = chars
            .iter()
            .enumerate()
            .map(|(i, &c)| if i == 0 { Value::Null } else { json!(mock_char_logprob(c)) })
            .collect();
        let v = json!({
            "object": "text_completion",
            "model": req["model"],
            "choices": [{
                "index": 0,
                "text": prompt,
                "logprobs": {"tokens": tokens, "token_logprobs": lps, "text_offset": offsets, "top_logprobs": null},
                "finish_reason": "length",
            }],
        });
        return (200, v.to_string());
    }
    (404, json!({"error": "unknown path"}).to_string())
}
