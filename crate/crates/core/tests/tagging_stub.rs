use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

use phototopics::tagging::{fetch_tags, TaggingEndpoint};
use phototopics::Error;

/// Serves `requests` HTTP requests. The path decides the answer: `/tags/b`
/// fails with 500, everything else gets two tags. Request lines and the
/// authorization header are sent back over the channel.
fn stub(requests: usize) -> (String, mpsc::Receiver<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for stream in listener.incoming().take(requests) {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            loop {
                let mut header = String::new();
                reader.read_line(&mut header).unwrap();
                if header.trim().is_empty() {
                    break;
                }
                if header.to_lowercase().starts_with("authorization:") {
                    tx.send(header.trim().to_string()).unwrap();
                }
            }
            tx.send(request_line.trim().to_string()).unwrap();
            let (status, body) = if request_line.contains("/tags/b ") {
                ("500 Internal Server Error", "{}".to_string())
            } else {
                ("200 OK", r#"{"result":{"tags":[{"tag":{"en":"Dog"},"confidence":93.5},{"tag":{"en":"grass"},"confidence":40}]}}"#.to_string())
            };
            write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (format!("http://{addr}"), rx)
}

#[test]
fn fetched_tags_become_records() {
    let (url, rx) = stub(1);
    let mut endpoint = TaggingEndpoint::new(url, "alice");
    endpoint.api_key = Some("secret".into());
    let report = fetch_tags(&endpoint, &["a".to_string()]).unwrap();
    assert!(report.failures.is_empty());
    let record = &report.records[0];
    assert_eq!(record.collection_id, "alice");
    let tags: Vec<(&str, f64)> = record
        .tags
        .iter()
        .map(|t| (t.tag.as_str(), t.confidence))
        .collect();
    assert_eq!(tags, vec![("dog", 0.935), ("grass", 0.4)]);
    let seen: Vec<String> = rx.try_iter().collect();
    assert!(seen
        .iter()
        .any(|s| s.eq_ignore_ascii_case("authorization: bearer secret")));
    assert!(seen.iter().any(|s| s.starts_with("GET /tags/a ")));
}

#[test]
fn server_errors_are_reported_per_image() {
    let (url, _rx) = stub(3);
    let endpoint = TaggingEndpoint::new(url, "bob");
    let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let report = fetch_tags(&endpoint, &ids).unwrap();
    assert_eq!(report.records.len(), 2);
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].image_id, "b");
    assert!(report.failures[0].reason.contains("500"));
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    // bind then drop, so nothing listens on the port
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let endpoint = TaggingEndpoint::new(format!("http://127.0.0.1:{port}"), "c");
    let err = fetch_tags(&endpoint, &["a".to_string()]).unwrap_err();
    assert!(matches!(err, Error::Transport(_)));
    assert_eq!(err.exit_code(), 3);
}
