mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use common::{completion, MockServer};
use informalize::parser::TheoremRecord;
use informalize::prompt::PromptSpec;
use informalize::teacher::{
    ChatRequest, HttpTransport, ItemError, TeacherClient, TeacherConfig, TeacherError, Transport, TransportError, Usage,
};

fn cfg(url: &str) -> TeacherConfig {
    TeacherConfig {
        endpoint_url: url.into(),
        retry_base_ms: 1,
        timeout_secs: 5,
        ..TeacherConfig::default()
    }
}

fn request(prompt: &str) -> ChatRequest {
    ChatRequest {
        model: "gpt-4".into(),
        temperature: 0.0,
        prompt: prompt.into(),
    }
}

fn spec(name: &str) -> PromptSpec {
    PromptSpec::full_proof(TheoremRecord {
        id: format!("x.lean:1:{name}"),
        name: name.into(),
        statement: format!("theorem {name} : True"),
        proof_body: "trivial".into(),
        source_file: "x.lean".into(),
        line_start: 1,
        line_end: 1,
    })
}

fn status_server(status: u16, body: &'static str) -> MockServer {
    MockServer::start(move |_| (status, body.to_string()))
}

#[test]
fn successful_reply_and_request_shape() {
    let server = MockServer::start(|_| completion("('a', 'b')", 12, 3));
    let t = HttpTransport::new(&cfg(&server.url), "k1");
    let reply = t.complete(&request("hello")).unwrap();
    assert_eq!(reply.content, "('a', 'b')");
    assert_eq!(reply.usage, Some(Usage { prompt_tokens: 12, completion_tokens: 3 }));
    let seen = server.requests();
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer k1"));
    assert_eq!(seen[0].body["messages"][0]["role"], "user");
    assert_eq!(seen[0].body["messages"][0]["content"], "hello");
}

#[test]
fn status_codes_map_to_errors() {
    type Case = (u16, fn(&TransportError) -> bool);
    let cases: [Case; 6] = [
        (401, |e| matches!(e, TransportError::Auth(_))),
        (403, |e| matches!(e, TransportError::Auth(_))),
        (429, |e| matches!(e, TransportError::RateLimited)),
        (500, |e| matches!(e, TransportError::Server { status: 500, .. })),
        (503, |e| matches!(e, TransportError::Server { status: 503, .. })),
        (400, |e| matches!(e, TransportError::Client { status: 400, .. })),
    ];
    for (status, check) in cases {
        let server = status_server(status, "{\"error\":\"x\"}");
        let err = HttpTransport::new(&cfg(&server.url), "k").complete(&request("p")).unwrap_err();
        assert!(check(&err), "{status} mapped to {err:?}");
        assert_eq!(err.is_retryable(), matches!(status, 429 | 500 | 503), "{status}");
    }
}

#[test]
fn garbage_body_is_a_protocol_error() {
    let server = status_server(200, "<html>not json</html>");
    let err = HttpTransport::new(&cfg(&server.url), "k").complete(&request("p")).unwrap_err();
    assert!(matches!(err, TransportError::Protocol(_)), "{err:?}");
}

#[test]
fn unreachable_endpoint_is_a_network_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    drop(listener);
    let err = HttpTransport::new(&cfg(&url), "k").complete(&request("p")).unwrap_err();
    assert!(matches!(err, TransportError::Network(_)), "{err:?}");
    assert!(err.is_retryable());
}

#[test]
fn client_retries_transient_failures() {
    let hits = Arc::new(AtomicUsize::new(0));
    let h = hits.clone();
    let server = MockServer::start(move |_| match h.fetch_add(1, Ordering::SeqCst) {
        0 => (503, "busy".into()),
        1 => (429, "slow down".into()),
        _ => completion("('f', 'done')", 10, 2),
    });
    let c = cfg(&server.url);
    let client = TeacherClient::new(c.clone(), Arc::new(HttpTransport::new(&c, "k")));
    let out = client.informalize_batch(&[spec("a")], None).unwrap();
    let r = &out.responses[0];
    assert_eq!(r.parsed.as_ref().unwrap().1, "done");
    assert_eq!(r.attempts, 3);
    assert_eq!(server.request_count(), 3);
    assert_eq!(out.ledger.total_requests(), 1);
}

#[test]
fn retries_are_bounded() {
    let server = status_server(500, "down");
    let c = TeacherConfig {
        max_retries: 2,
        ..cfg(&server.url)
    };
    let client = TeacherClient::new(c.clone(), Arc::new(HttpTransport::new(&c, "k")));
    let out = client.informalize_batch(&[spec("a")], None).unwrap();
    assert!(matches!(out.responses[0].error, Some(ItemError::Endpoint(_))));
    assert_eq!(server.request_count(), 3);
    assert_eq!(out.ledger.total_requests(), 0);
}

#[test]
fn auth_failure_aborts_the_batch() {
    let server = status_server(401, "nope");
    let c = TeacherConfig {
        max_parallel: 1,
        ..cfg(&server.url)
    };
    let client = TeacherClient::new(c.clone(), Arc::new(HttpTransport::new(&c, "k")));
    let specs: Vec<PromptSpec> = (0..5).map(|i| spec(&format!("t{i}"))).collect();
    assert!(matches!(client.informalize_batch(&specs, None), Err(TeacherError::Auth(_))));
    assert_eq!(server.request_count(), 1);
}
