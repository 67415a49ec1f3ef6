//! The completions client against a scripted local HTTP server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use copyguard::lm::{
    ClientConfig, CompletionsClient, GenerationConfig, LanguageModel, LmError, RemoteModel, TextGenerator,
    WordGenerator,
};
use copyguard::metrics::WordTokenizer;
use copyguard::Vocab;
use serde_json::{json, Value};

struct Reply {
    status: u16,
    headers: Vec<(&'static str, String)>,
    body: String,
}

fn ok(body: Value) -> Reply {
    Reply {
        status: 200,
        headers: vec![],
        body: body.to_string(),
    }
}

fn status(code: u16) -> Reply {
    Reply {
        status: code,
        headers: vec![("Retry-After", "0".into())],
        body: format!("{{\"error\":\"status {code}\"}}"),
    }
}

#[derive(Debug, Clone)]
struct Seen {
    path: String,
    auth: Option<String>,
    body: Value,
}

struct Server {
    url: String,
    seen: Arc<Mutex<Vec<Seen>>>,
    peak: Arc<AtomicUsize>,
}

fn read_request(stream: &mut TcpStream) -> Option<Seen> {
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let path = line.split_whitespace().nth(1)?.to_string();
    let mut len = 0;
    let mut auth = None;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        let (name, value) = h.split_once(':')?;
        match name.to_ascii_lowercase().as_str() {
            "content-length" => len = value.trim().parse().ok()?,
            "authorization" => auth = Some(value.trim().to_string()),
            _ => {}
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).ok()?;
    Some(Seen {
        path,
        auth,
        body: serde_json::from_slice(&body).unwrap_or(Value::Null),
    })
}

/// Serves `replies` in order, one connection each, handling connections on
/// separate threads so concurrency can be observed.
fn serve(replies: Vec<Reply>, delay: Duration) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let peak = Arc::new(AtomicUsize::new(0));
    let active = Arc::new(AtomicUsize::new(0));
    let replies = Arc::new(Mutex::new(replies.into_iter()));
    let (s, p) = (seen.clone(), peak.clone());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let (seen, peak, active, replies) = (s.clone(), p.clone(), active.clone(), replies.clone());
            thread::spawn(move || {
                let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                peak.fetch_max(now, Ordering::SeqCst);
                if let Some(req) = read_request(&mut stream) {
                    seen.lock().unwrap().push(req);
                    thread::sleep(delay);
                    let reply = replies.lock().unwrap().next().unwrap_or_else(|| status(500));
                    let mut head = format!(
                        "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n",
                        reply.status,
                        reply.body.len()
                    );
                    for (k, v) in &reply.headers {
                        head.push_str(&format!("{k}: {v}\r\n"));
                    }
                    head.push_str("\r\n");
                    let _ = stream.write_all(head.as_bytes());
                    let _ = stream.write_all(reply.body.as_bytes());
                }
                active.fetch_sub(1, Ordering::SeqCst);
            });
        }
    });
    Server { url, seen, peak }
}

fn client(url: &str, retries: u32) -> CompletionsClient {
    let mut cfg = ClientConfig::new(url, "test-model");
    cfg.api_key = Some("secret".into());
    cfg.max_retries = retries;
    cfg.backoff = Duration::from_millis(1);
    cfg.timeout = Duration::from_secs(5);
    CompletionsClient::new(cfg).unwrap()
}

fn text_reply(text: &str) -> Reply {
    ok(json!({"choices": [{"text": text}]}))
}

#[test]
fn completion_sends_documented_body_and_bearer_token() {
    let server = serve(vec![text_reply("hello there")], Duration::ZERO);
    let c = client(&format!("{}/", server.url), 0);
    let cfg = GenerationConfig { max_tokens: 7, temperature: 0.6, top_p: 0.9, seed: 1 };
    assert_eq!(c.complete("Say hi", &cfg).unwrap(), "hello there");
    let seen = server.seen.lock().unwrap();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].path, "/v1/completions");
    assert_eq!(seen[0].auth.as_deref(), Some("Bearer secret"));
    assert_eq!(
        seen[0].body,
        json!({"model": "test-model", "prompt": "Say hi", "max_tokens": 7, "temperature": 0.6,
               "top_p": 0.9, "logprobs": 0, "echo": false})
    );
}

#[test]
fn retries_server_errors_then_succeeds() {
    let server = serve(vec![status(503), status(429), text_reply("ok")], Duration::ZERO);
    let c = client(&server.url, 3);
    assert_eq!(c.complete("x", &GenerationConfig::greedy(1)).unwrap(), "ok");
    assert_eq!(server.seen.lock().unwrap().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let server = serve(vec![status(400), text_reply("never")], Duration::ZERO);
    let c = client(&server.url, 3);
    match c.complete("x", &GenerationConfig::greedy(1)) {
        Err(LmError::Http { status, attempts, retryable, body }) => {
            assert_eq!((status, attempts, retryable), (400, 1, false));
            assert!(body.contains("status 400"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(server.seen.lock().unwrap().len(), 1);
}

#[test]
fn exhausted_retries_report_attempt_count() {
    let server = serve(vec![status(500), status(502), status(500)], Duration::ZERO);
    let c = client(&server.url, 2);
    let err = c.complete("x", &GenerationConfig::greedy(1)).unwrap_err();
    assert!(err.is_remote());
    assert!(matches!(err, LmError::Http { status: 500, attempts: 3, retryable: true, .. }), "{err:?}");
}

#[test]
fn connection_failure_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let c = client(&format!("http://127.0.0.1:{port}"), 1);
    assert!(matches!(
        c.complete("x", &GenerationConfig::greedy(1)),
        Err(LmError::Transport { attempts: 2, .. })
    ));
}

#[test]
fn scoring_uses_text_offsets_to_find_the_target() {
    let echo = ok(json!({"choices": [{"text": "a b c", "logprobs": {
        "tokens": ["a", " b", " c"], "token_logprobs": [null, -1.0, -2.5], "text_offset": [0, 1, 3]}}]}));
    let server = serve(vec![echo], Duration::ZERO);
    let c = client(&server.url, 0);
    assert_eq!(c.score_text("a", " b c").unwrap(), vec![-1.0, -2.5]);
    let seen = server.seen.lock().unwrap();
    assert_eq!(seen[0].body["echo"], json!(true));
    assert_eq!(seen[0].body["max_tokens"], json!(0));
    assert_eq!(seen[0].body["prompt"], json!("a b c"));
}

#[test]
fn scoring_without_offsets_subtracts_the_context_tokens() {
    let full = ok(json!({"choices": [{"text": "", "logprobs": {"token_logprobs": [null, -0.5, -0.25]}}]}));
    let ctx = ok(json!({"choices": [{"text": "", "logprobs": {"token_logprobs": [null]}}]}));
    let server = serve(vec![full, ctx], Duration::ZERO);
    let c = client(&server.url, 0);
    assert_eq!(c.score_text("a", " b c").unwrap(), vec![-0.5, -0.25]);
}

#[test]
fn missing_logprobs_is_a_capability_error() {
    let server = serve(vec![text_reply("")], Duration::ZERO);
    let c = client(&server.url, 0);
    assert!(matches!(c.score_text("a", " b"), Err(LmError::Capability(_))));
}

#[test]
fn in_flight_requests_are_capped() {
    let replies = (0..8).map(|_| text_reply("y")).collect();
    let server = serve(replies, Duration::from_millis(60));
    let mut cfg = ClientConfig::new(server.url.clone(), "m");
    cfg.max_in_flight = 2;
    cfg.max_retries = 0;
    let c = Arc::new(CompletionsClient::new(cfg).unwrap());
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let c = c.clone();
            thread::spawn(move || c.complete("x", &GenerationConfig::greedy(1)).unwrap())
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), "y");
    }
    let peak = server.peak.load(Ordering::SeqCst);
    assert!((1..=2).contains(&peak), "peak concurrency {peak}");
}

#[test]
fn remote_model_speaks_words_and_tokens() {
    let tok = WordTokenizer::default();
    let vocab = Vocab::build("r", &tok, ["the cat sat on a mat"], &["Copying: No"]);
    let server = serve(vec![text_reply(" on a mat, purring"), text_reply("The cat")], Duration::ZERO);
    let model = RemoteModel::new(client(&server.url, 0), vocab.clone());
    let ctx = vocab.encode(&tok, "the cat sat");
    let out = model.generate(&ctx, &GenerationConfig::greedy(4)).unwrap();
    assert_eq!(vocab.decode(out.tokens()), "on a mat <unk>");
    let words = model
        .continue_words(Some("Copying: No"), &["hello".to_string()], &GenerationConfig::greedy(5))
        .unwrap();
    assert_eq!(words, ["the", "cat"]);
    let seen = server.seen.lock().unwrap();
    assert_eq!(seen[0].body["prompt"], json!("the cat sat"));
    assert_eq!(seen[1].body["prompt"], json!("Copying: No\n\nhello"));
}
