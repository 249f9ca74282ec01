//! Optional client for an HTTP auto-tagging service.
//!
//! For every image id the client issues `GET {base_url}/tags/{image_id}` and
//! accepts either of two response bodies:
//!
//! ```json
//! {"tags": [{"tag": "dog", "confidence": 0.93}]}
//! {"result": {"tags": [{"tag": {"en": "dog"}, "confidence": 93.0}]}}
//! ```
//!
//! The second form reports confidences in percent. Per-image HTTP failures
//! are collected; an unreachable endpoint aborts the whole batch.

use std::time::Duration;

use serde_json::Value;

use crate::corpus::TagRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TaggingEndpoint {
    pub base_url: String,
    /// Sent as a bearer token when present.
    pub api_key: Option<String>,
    /// Collection the fetched records are attributed to.
    pub collection_id: String,
    pub timeout: Duration,
}

impl TaggingEndpoint {
    pub fn new(base_url: impl Into<String>, collection_id: impl Into<String>) -> Self {
        TaggingEndpoint {
            base_url: base_url.into(),
            api_key: None,
            collection_id: collection_id.into(),
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchFailure {
    pub image_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FetchReport {
    pub records: Vec<TagRecord>,
    pub failures: Vec<FetchFailure>,
}

fn encode_segment(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' => {
                out.push(b as char)
            }
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

/// Extracts `(tag, confidence)` pairs from either supported response shape.
pub fn parse_tag_response(body: &Value) -> Result<Vec<(String, f64)>> {
    let bad = |msg: &str| Error::Validation(format!("tagging response: {msg}"));
    if let Some(tags) = body.get("tags").and_then(Value::as_array) {
        return tags
            .iter()
            .map(|t| {
                let tag = t
                    .get("tag")
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("missing tag"))?;
                let c = t
                    .get("confidence")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| bad("missing confidence"))?;
                Ok((tag.to_string(), c))
            })
            .collect();
    }
    if let Some(tags) = body
        .get("result")
        .and_then(|r| r.get("tags"))
        .and_then(Value::as_array)
    {
        return tags
            .iter()
            .map(|t| {
                let tag = t
                    .get("tag")
                    .and_then(|v| v.get("en"))
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("missing tag.en"))?;
                let c = t
                    .get("confidence")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| bad("missing confidence"))?;
                Ok((tag.to_string(), (c / 100.0).clamp(0.0, 1.0)))
            })
            .collect();
    }
    Err(bad("no tags array"))
}

/// Fetches tags for every id. Returns one record per successful id and one
/// failure per id the service rejected or answered with an unusable body.
pub fn fetch_tags(endpoint: &TaggingEndpoint, ids: &[String]) -> Result<FetchReport> {
    if ids.is_empty() {
        return Err(Error::InvalidArgument("no image ids to tag".into()));
    }
    let agent = ureq::AgentBuilder::new().timeout(endpoint.timeout).build();
    let base = endpoint.base_url.trim_end_matches('/');
    let mut report = FetchReport::default();
    for id in ids {
        let url = format!("{base}/tags/{}", encode_segment(id));
        let mut request = agent.get(&url);
        if let Some(key) = &endpoint.api_key {
            request = request.set("Authorization", &format!("Bearer {key}"));
        }
        let response = match request.call() {
            Ok(r) => r,
            Err(ureq::Error::Status(code, _)) => {
                report.failures.push(FetchFailure {
                    image_id: id.clone(),
                    reason: format!("HTTP {code}"),
                });
                continue;
            }
            Err(ureq::Error::Transport(t)) => {
                return Err(Error::Transport(format!("{url}: {t}")));
            }
        };
        let parsed = response
            .into_json::<Value>()
            .map_err(|e| Error::Validation(format!("tagging response: {e}")))
            .and_then(|body| parse_tag_response(&body))
            .and_then(|tags| TagRecord::new(id.clone(), endpoint.collection_id.clone(), tags));
        match parsed {
            Ok(record) => report.records.push(record),
            Err(e) => report.failures.push(FetchFailure {
                image_id: id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_response_shapes() {
        let plain: Value =
            serde_json::from_str(r#"{"tags":[{"tag":"Dog","confidence":0.5}]}"#).unwrap();
        assert_eq!(
            parse_tag_response(&plain).unwrap(),
            vec![("Dog".to_string(), 0.5)]
        );
        let nested: Value =
            serde_json::from_str(r#"{"result":{"tags":[{"tag":{"en":"dog"},"confidence":93.0}]}}"#)
                .unwrap();
        assert_eq!(
            parse_tag_response(&nested).unwrap(),
            vec![("dog".to_string(), 0.93)]
        );
        assert!(parse_tag_response(&serde_json::json!({"x": 1})).is_err());
    }

    #[test]
    fn encodes_path_segments() {
        assert_eq!(encode_segment("a b/c"), "a%20b%2Fc");
        assert_eq!(encode_segment("IMG_01.jpg"), "IMG_01.jpg");
    }

    #[test]
    fn empty_id_list_is_rejected() {
        let endpoint = TaggingEndpoint::new("http://127.0.0.1:9", "u");
        assert!(matches!(
            fetch_tags(&endpoint, &[]),
            Err(Error::InvalidArgument(_))
        ));
    }
}
