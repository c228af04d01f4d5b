//! HTTP adapter for remotely served classifiers.
//!
//! Wire contract: `POST {endpoint}/v1/classify` with
//! `{"task": str, "texts": [str]}`, answered by
//! `{"labels": [int], "scores": [[float]]}` where `scores` is optional.
//! Missing scores are synthesized as one-hot vectors.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Decision, Task, TextClassifier};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteConfig {
    /// Base URL of the service, or the full `/v1/classify` URL.
    pub endpoint: String,
    pub timeout_ms: u64,
    /// Extra attempts after the first one fails transiently.
    #[serde(default = "default_retries")]
    pub retries: usize,
    #[serde(default = "default_max_batch")]
    pub max_batch: usize,
    /// Upper bound on concurrent requests from one classify call.
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    /// Task name sent on the wire, when it differs from the local task.
    #[serde(default)]
    pub remote_task: Option<String>,
}

fn default_retries() -> usize {
    2
}

fn default_max_batch() -> usize {
    64
}

fn default_in_flight() -> usize {
    4
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            timeout_ms: timeout.as_millis() as u64,
            retries: default_retries(),
            max_batch: default_max_batch(),
            max_in_flight: default_in_flight(),
            remote_task: None,
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        let f = |k: &str| format!("{field}.parameters.{k}");
        if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
            return Err(Error::config(f("endpoint"), "must be an http(s) URL"));
        }
        if self.timeout_ms == 0 {
            return Err(Error::config(f("timeout_ms"), "must be positive"));
        }
        if self.max_batch == 0 {
            return Err(Error::config(f("max_batch"), "must be at least 1"));
        }
        if self.max_in_flight == 0 {
            return Err(Error::config(f("max_in_flight"), "must be at least 1"));
        }
        Ok(())
    }

    fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/v1/classify") {
            base.to_owned()
        } else {
            format!("{base}/v1/classify")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub task: String,
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub labels: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<Vec<f64>>>,
}

/// Turns a wire response into decisions, rejecting anything that does not
/// line up one-to-one with the request.
pub(crate) fn decode_response(resp: ClassifyResponse, expected: usize, classes: usize) -> Result<Vec<Decision>> {
    if resp.labels.len() != expected {
        return Err(Error::Protocol(format!(
            "expected {expected} labels, got {}",
            resp.labels.len()
        )));
    }
    if let Some(scores) = &resp.scores {
        if scores.len() != expected {
            return Err(Error::Protocol(format!(
                "expected {expected} score rows, got {}",
                scores.len()
            )));
        }
    }
    let mut out = Vec::with_capacity(expected);
    for (i, &label) in resp.labels.iter().enumerate() {
        if label < 0 || label as usize >= classes {
            return Err(Error::Protocol(format!("label {label} outside 0..{classes}")));
        }
        let label = label as usize;
        let d = match &resp.scores {
            None => Decision::one_hot(label, classes),
            Some(rows) => {
                let row = rows[i].clone();
                if row.len() != classes {
                    return Err(Error::Protocol(format!(
                        "score row {i} has {} entries, expected {classes}",
                        row.len()
                    )));
                }
                let d = Decision::from_scores(row).map_err(|e| Error::Protocol(e.to_string()))?;
                if d.label != label {
                    return Err(Error::Protocol(format!(
                        "label {label} disagrees with score argmax {} at row {i}",
                        d.label
                    )));
                }
                d
            }
        };
        out.push(d);
    }
    Ok(out)
}

enum Attempt {
    Transient(String),
    Fatal(Error),
}

/// Client for one `(endpoint, task)` pair.
#[derive(Debug, Clone)]
pub struct RemoteClassifier {
    config: RemoteConfig,
    task: Task,
    agent: ureq::Agent,
}

impl RemoteClassifier {
    pub fn new(config: RemoteConfig, task: Task) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteClassifier { config, task, agent }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn wire_task(&self) -> &str {
        self.config.remote_task.as_deref().unwrap_or(self.task.as_str())
    }

    fn attempt(&self, body: &ClassifyRequest) -> std::result::Result<Vec<Decision>, Attempt> {
        let mut resp = match self.agent.post(self.config.url()).send_json(body) {
            Ok(r) => r,
            Err(e) => return Err(Attempt::Transient(e.to_string())),
        };
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Transient(e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err(Attempt::Transient(format!("HTTP {status}: {text}")));
        }
        if status != 200 {
            return Err(Attempt::Fatal(Error::Protocol(format!("HTTP {status}: {text}"))));
        }
        let parsed: ClassifyResponse = serde_json::from_str(&text)
            .map_err(|e| Attempt::Fatal(Error::Protocol(format!("malformed response: {e}"))))?;
        decode_response(parsed, body.texts.len(), self.task.class_count()).map_err(Attempt::Fatal)
    }

    /// Sends one batch, retrying transient failures.
    fn send_batch(&self, texts: &[&str]) -> Result<Vec<Decision>> {
        let body = ClassifyRequest {
            task: self.wire_task().to_owned(),
            texts: texts.iter().map(|t| t.to_string()).collect(),
        };
        let attempts = self.config.retries + 1;
        let mut last = String::new();
        for _ in 0..attempts {
            match self.attempt(&body) {
                Ok(d) => return Ok(d),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Transient(reason)) => last = reason,
            }
        }
        Err(Error::Transport {
            attempts,
            reason: last,
        })
    }
}

impl TextClassifier for RemoteClassifier {
    fn class_count(&self) -> usize {
        self.task.class_count()
    }

    /// Splits `texts` into batches of at most `max_batch` and sends up to
    /// `max_in_flight` of them at once. Output order matches input order.
    fn classify_batch(&self, texts: &[&str]) -> Result<Vec<Decision>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let batches: Vec<&[&str]> = texts.chunks(self.config.max_batch).collect();
        let mut out = Vec::with_capacity(texts.len());
        for wave in batches.chunks(self.config.max_in_flight) {
            let results: Vec<Result<Vec<Decision>>> = std::thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|b| s.spawn(move || self.send_batch(b)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("remote worker panicked"))
                    .collect()
            });
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }
}

/// One request/response exchange for a single batch.
pub fn remote_classify(config: &RemoteConfig, task: Task, texts: &[&str]) -> Result<Vec<Decision>> {
    config.validate("remote")?;
    if texts.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    if texts.len() > config.max_batch {
        return Err(Error::InvalidInput(format!(
            "batch of {} exceeds max_batch {}",
            texts.len(),
            config.max_batch
        )));
    }
    RemoteClassifier::new(config.clone(), task).send_batch(texts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_synthesizes_one_hot() {
        let d = decode_response(
            ClassifyResponse {
                labels: vec![1, 0],
                scores: None,
            },
            2,
            2,
        )
        .unwrap();
        assert_eq!(d[0], Decision::one_hot(1, 2));
        assert_eq!(d[1], Decision::one_hot(0, 2));
    }

    #[test]
    fn decode_rejects_mismatches() {
        let r = |labels: Vec<i64>, scores: Option<Vec<Vec<f64>>>| ClassifyResponse { labels, scores };
        assert!(matches!(decode_response(r(vec![1], None), 2, 2), Err(Error::Protocol(_))));
        assert!(matches!(decode_response(r(vec![2], None), 1, 2), Err(Error::Protocol(_))));
        assert!(matches!(
            decode_response(r(vec![1], Some(vec![vec![0.9, 0.1]])), 1, 2),
            Err(Error::Protocol(_))
        ));
        assert!(matches!(
            decode_response(r(vec![1], Some(vec![vec![0.1, 0.2, 0.7]])), 1, 2),
            Err(Error::Protocol(_))
        ));
        assert!(decode_response(r(vec![1], Some(vec![vec![0.1, 0.9]])), 1, 2).is_ok());
    }

    #[test]
    fn url_building() {
        let c = RemoteConfig::new("http://h:1/", Duration::from_secs(1));
        assert_eq!(c.url(), "http://h:1/v1/classify");
        let c = RemoteConfig::new("http://h:1/v1/classify", Duration::from_secs(1));
        assert_eq!(c.url(), "http://h:1/v1/classify");
    }

    #[test]
    fn batch_limits() {
        let mut c = RemoteConfig::new("http://127.0.0.1:9", Duration::from_millis(50));
        c.max_batch = 1;
        assert!(remote_classify(&c, Task::Hate, &["a", "b"]).is_err());
        assert!(remote_classify(&c, Task::Hate, &[]).is_err());
    }
}
