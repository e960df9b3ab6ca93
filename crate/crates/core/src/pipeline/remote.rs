//! HTTP client for an external classifier.
//!
//! `POST {endpoint}/probs` with `{"texts": [...]}` must answer
//! `{"probs": [[...], ...]}`, one distribution per text in request order.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::classifier::Scorer;
use crate::error::{Error, Result};
use crate::infotheory::ProbVector;
use crate::text::TokenizedText;

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub timeout: Duration,
    pub batch_size: usize,
    pub max_attempts: usize,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff: Duration,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: Duration::from_secs(30),
            batch_size: 64,
            max_attempts: 3,
            backoff: Duration::from_millis(500),
        }
    }

    fn url(&self) -> String {
        format!("{}/probs", self.endpoint.trim_end_matches('/'))
    }
}

#[derive(Serialize)]
struct ProbsRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct ProbsResponse {
    probs: Vec<Vec<f64>>,
}

enum Failure {
    Retriable(String),
    Fatal(Error),
}

pub struct RemoteScorer {
    config: RemoteConfig,
    num_classes: usize,
    agent: ureq::Agent,
}

impl RemoteScorer {
    pub fn new(config: RemoteConfig, num_classes: usize) -> Result<Self> {
        if config.batch_size == 0 || config.max_attempts == 0 {
            return Err(Error::Config("remote batch size and attempt count must be at least 1".into()));
        }
        if num_classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {num_classes}")));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            config,
            num_classes,
            agent,
        })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// Scores `texts` in batches, preserving order.
    pub fn score(&self, texts: &[String]) -> Result<Vec<ProbVector>> {
        let mut out = Vec::with_capacity(texts.len());
        for (b, batch) in texts.chunks(self.config.batch_size).enumerate() {
            let offset = b * self.config.batch_size;
            let rows = self.request_with_retry(batch)?;
            if rows.len() != batch.len() {
                return Err(Error::Protocol(format!(
                    "sent {} texts, received {} distributions",
                    batch.len(),
                    rows.len()
                )));
            }
            for (i, row) in rows.into_iter().enumerate() {
                let index = offset + i;
                if row.len() != self.num_classes {
                    return Err(Error::Protocol(format!(
                        "distribution {index} has {} classes, expected {}",
                        row.len(),
                        self.num_classes
                    )));
                }
                out.push(
                    ProbVector::new(row).map_err(|e| Error::Protocol(format!("distribution {index} is invalid: {e}")))?,
                );
            }
        }
        Ok(out)
    }

    fn request_with_retry(&self, batch: &[String]) -> Result<Vec<Vec<f64>>> {
        let mut delay = self.config.backoff;
        let mut last = String::new();
        for attempt in 1..=self.config.max_attempts {
            match self.request(batch) {
                Ok(rows) => return Ok(rows),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retriable(msg)) => last = msg,
            }
            if attempt < self.config.max_attempts {
                std::thread::sleep(delay);
                delay *= 2;
            }
        }
        Err(Error::Transport(format!(
            "{} failed after {} attempts: {last}",
            self.config.url(),
            self.config.max_attempts
        )))
    }

    fn request(&self, batch: &[String]) -> std::result::Result<Vec<Vec<f64>>, Failure> {
        let mut response = self
            .agent
            .post(&self.config.url())
            .send_json(ProbsRequest { texts: batch })
            .map_err(|e| match e {
                ureq::Error::BadUri(u) => Failure::Fatal(Error::Config(format!("bad scorer URL: {u}"))),
                other => Failure::Retriable(other.to_string()),
            })?;
        let status = response.status().as_u16();
        if status >= 500 {
            return Err(Failure::Retriable(format!("server answered {status}")));
        }
        if status != 200 {
            return Err(Failure::Fatal(Error::Protocol(format!("server answered {status}"))));
        }
        let body: ProbsResponse = response.body_mut().read_json().map_err(|e| match e {
            ureq::Error::Json(e) => Failure::Fatal(Error::Protocol(format!("malformed response: {e}"))),
            other => Failure::Retriable(other.to_string()),
        })?;
        Ok(body.probs)
    }
}

impl Scorer for RemoteScorer {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn predict_batch(&self, texts: &[TokenizedText]) -> Result<Vec<ProbVector>> {
        let texts: Vec<String> = texts.iter().map(TokenizedText::canonical).collect();
        self.score(&texts)
    }
}
