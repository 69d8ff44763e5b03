//! The HTTP client against a throwaway local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use gamblebench::agents::{AgentError, HttpTransport, LlmClient, LlmConfig};

struct Captured {
    headers: Vec<String>,
    body: String,
}

/// Serves one canned `(status, body)` per connection, in order.
fn serve(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Captured>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = Vec::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end().to_string();
                if line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                headers.push(line);
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(Captured {
                headers,
                body: String::from_utf8(buf).unwrap(),
            });
            let mut out = stream;
            write!(
                out,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn ok_body(text: &str) -> String {
    serde_json::json!({
        "id": "chatcmpl-42",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": 120, "completion_tokens": 7, "total_tokens": 127}
    })
    .to_string()
}

fn config(url: &str) -> LlmConfig {
    let mut c = LlmConfig::new(url, "model-x");
    c.backoff_base_ms = 1;
    c.backoff_max_ms = 5;
    c.timeout_secs = 5.0;
    c
}

#[test]
fn request_shape_and_transient_retry() {
    let (url, seen) = serve(vec![
        (503, "{}".into()),
        (429, "{}".into()),
        (200, ok_body("Bet $20")),
    ]);
    let client = LlmClient::new(config(&url), Box::new(HttpTransport::new(&url, Some("sk-test".into()))));
    let done = client.complete("PROMPT TEXT").unwrap();
    assert_eq!(done.text, "Bet $20");
    assert_eq!(done.call.retries, 2);
    assert_eq!(done.call.request_id.as_deref(), Some("chatcmpl-42"));
    assert_eq!(done.call.prompt_tokens, Some(120));
    assert_eq!(done.call.completion_tokens, Some(7));
    assert_eq!(done.call.raw, "Bet $20");

    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 3);
    let req: serde_json::Value = serde_json::from_str(&seen[2].body).unwrap();
    assert_eq!(req["model"], "model-x");
    assert_eq!(req["messages"].as_array().unwrap().len(), 1);
    assert_eq!(req["messages"][0]["role"], "user");
    assert_eq!(req["messages"][0]["content"], "PROMPT TEXT");
    assert_eq!(req["temperature"], 1.0);
    assert_eq!(req["max_tokens"], 1024);
    assert!(seen[2].headers.iter().any(|h| h.eq_ignore_ascii_case("authorization: Bearer sk-test")));
    assert!(seen[2].headers[0].starts_with("POST /v1/chat/completions"));
}

#[test]
fn five_failures_make_the_agent_unavailable() {
    let (url, seen) = serve((0..5).map(|_| (500, "{}".to_string())).collect());
    let client = LlmClient::new(config(&url), Box::new(HttpTransport::new(&url, None)));
    let err = client.complete("x").unwrap_err();
    assert!(matches!(err, AgentError::AgentUnavailable(_)));
    assert_eq!(seen.lock().unwrap().len(), 5);
}

#[test]
fn client_errors_fail_fast() {
    let (url, seen) = serve(vec![(401, r#"{"error":"bad key"}"#.into())]);
    let client = LlmClient::new(config(&url), Box::new(HttpTransport::new(&url, None)));
    assert!(client.complete("x").is_err());
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn malformed_body_is_retried() {
    let (url, seen) = serve(vec![(200, "not json".into()), (200, ok_body("Quit"))]);
    let client = LlmClient::new(config(&url), Box::new(HttpTransport::new(&url, None)));
    let done = client.complete("x").unwrap();
    assert_eq!(done.text, "Quit");
    assert_eq!(seen.lock().unwrap().len(), 2);
}
