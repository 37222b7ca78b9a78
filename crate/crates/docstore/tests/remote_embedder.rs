//! RemoteEmbedder against a one-shot local HTTP server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread::JoinHandle;
use std::time::Duration;

use mup_docstore::*;

/// Serves one request with `status` and `body`; returns the request body.
fn serve_once(status: &str, body: &'static str) -> (String, JoinHandle<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let status = status.to_string();
    let handle = std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream);
        let mut len = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line == "\r\n" || line.is_empty() {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                len = v.trim().parse().unwrap();
            }
        }
        let mut req = vec![0; len];
        reader.read_exact(&mut req).unwrap();
        let mut stream = reader.into_inner();
        write!(
            stream,
            "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        )
        .unwrap();
        String::from_utf8(req).unwrap()
    });
    (format!("http://{addr}/v1"), handle)
}

fn config(endpoint: String, dimension: usize) -> RemoteEmbedderConfig {
    RemoteEmbedderConfig {
        endpoint,
        model: "test-model".into(),
        dimension,
        api_key: Some("k".into()),
        timeout: Duration::from_secs(5),
    }
}

#[test]
fn embeds_and_normalizes() {
    let (url, server) = serve_once("200 OK", r#"{"data":[{"index":0,"embedding":[3.0,4.0]}]}"#);
    let e = RemoteEmbedder::new(config(url, 2)).unwrap();
    assert_eq!(e.embed("hello").unwrap(), vec![0.6, 0.8]);
    let req: serde_json::Value = serde_json::from_str(&server.join().unwrap()).unwrap();
    assert_eq!(req["model"], "test-model");
    assert_eq!(req["input"], serde_json::json!(["hello"]));
}

#[test]
fn batch_results_follow_the_index_field() {
    let (url, _server) =
        serve_once("200 OK", r#"{"data":[{"index":1,"embedding":[0.0,2.0]},{"index":0,"embedding":[5.0,0.0]}]}"#);
    let e = RemoteEmbedder::new(config(url, 2)).unwrap();
    assert_eq!(e.embed_batch(&["a", "b"]).unwrap(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
}

#[test]
fn wrong_dimension_is_reported() {
    let (url, _server) = serve_once("200 OK", r#"{"data":[{"index":0,"embedding":[1.0,0.0,0.0]}]}"#);
    let e = RemoteEmbedder::new(config(url, 2)).unwrap();
    assert_eq!(e.embed("x"), Err(EmbedError::DimensionMismatch { expected: 2, got: 3 }));
}

#[test]
fn server_errors_and_unreachable_hosts_are_unavailable() {
    let (url, _server) = serve_once("503 Service Unavailable", "{}");
    let e = RemoteEmbedder::new(config(url, 2)).unwrap();
    assert!(matches!(e.embed("x"), Err(EmbedError::BackendUnavailable(_))));

    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let e = RemoteEmbedder::new(config(format!("http://127.0.0.1:{port}/v1"), 2)).unwrap();
    assert!(matches!(e.embed("x"), Err(EmbedError::BackendUnavailable(_))));
}

#[test]
fn ingest_reports_the_failing_document() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let e = RemoteEmbedder::new(config(format!("http://127.0.0.1:{port}/v1"), 2)).unwrap();
    let err = DocumentStore::ingest([("ryan", "text")], StoreParams::default(), std::sync::Arc::new(e)).unwrap_err();
    assert!(matches!(err, StoreError::Embed { ref doc_id, .. } if doc_id == "ryan"));
}
