use std::time::Duration;

use futures::stream::{self, StreamExt, TryStreamExt};
use serde::{Deserialize, Serialize};

use crate::corpus::CodingScheme;

use super::{LabelingError, FALLBACK_LABEL};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub url: String,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_batch_size() -> usize {
    64
}
fn default_concurrency() -> usize {
    4
}
fn default_timeout_secs() -> u64 {
    30
}

impl RemoteConfig {
    pub fn new(url: impl Into<String>) -> Self {
        RemoteConfig {
            url: url.into(),
            threshold: DEFAULT_THRESHOLD,
            batch_size: default_batch_size(),
            concurrency: default_concurrency(),
            timeout_secs: default_timeout_secs(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct Health {
    status: String,
    labels: Vec<String>,
}

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct ClassifyResponse {
    scores: Vec<Vec<f64>>,
}

/// Labels decoded from one score row, highest score first.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredLabels {
    pub labels: Vec<String>,
    /// `None` when no score reached the threshold and the fallback was used.
    pub scores: Option<Vec<f64>>,
}

/// Client for the classification service. Construction performs the health
/// check and verifies the service labels match the scheme.
#[derive(Debug, Clone)]
pub struct RemoteClassifier {
    config: RemoteConfig,
    client: reqwest::Client,
    labels: Vec<String>,
}

impl RemoteClassifier {
    pub async fn connect(config: RemoteConfig, scheme: &CodingScheme) -> Result<Self, LabelingError> {
        if config.batch_size == 0 || config.concurrency == 0 {
            return Err(LabelingError::Config("batch_size and concurrency must be positive".into()));
        }
        if !(0.0..=1.0).contains(&config.threshold) {
            return Err(LabelingError::Config(format!("threshold {} outside [0,1]", config.threshold)));
        }
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()?;
        let health: Health = client
            .get(endpoint(&config.url, "health"))
            .send()
            .await?
            .error_for_status()?
            .json()
            .await?;
        if health.status != "ok" {
            return Err(LabelingError::Contract(format!("service status {:?}", health.status)));
        }
        let mut theirs: Vec<&str> = health.labels.iter().map(String::as_str).collect();
        let mut ours = scheme.all_labels();
        theirs.sort_unstable();
        ours.sort_unstable();
        if theirs != ours {
            return Err(LabelingError::Contract(format!(
                "service labels {:?} differ from scheme labels {:?}",
                health.labels,
                scheme.all_labels()
            )));
        }
        Ok(RemoteClassifier { config, client, labels: health.labels })
    }

    /// Label order of the service's score rows.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// One decoded label set per text, in input order.
    pub async fn classify(&self, texts: &[String]) -> Result<Vec<ScoredLabels>, LabelingError> {
        let batches: Vec<Vec<Vec<f64>>> = stream::iter(texts.chunks(self.config.batch_size))
            .map(|chunk| self.score_batch(chunk))
            .buffered(self.config.concurrency)
            .try_collect()
            .await?;
        Ok(batches
            .into_iter()
            .flatten()
            .map(|row| decode_scores(&row, &self.labels, self.config.threshold))
            .collect())
    }

    async fn score_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, LabelingError> {
        let resp: ClassifyResponse = self
            .client
            .post(endpoint(&self.config.url, "classify"))
            .json(&ClassifyRequest { texts })
            .send()
            .await?
            .error_for_status()?
            .json()
            .await?;
        if resp.scores.len() != texts.len() {
            return Err(LabelingError::Contract(format!(
                "{} score rows for {} texts",
                resp.scores.len(),
                texts.len()
            )));
        }
        for row in &resp.scores {
            if row.len() != self.labels.len() {
                return Err(LabelingError::Contract(format!(
                    "score row of arity {} for {} labels",
                    row.len(),
                    self.labels.len()
                )));
            }
            if row.iter().any(|s| !(0.0..=1.0).contains(s)) {
                return Err(LabelingError::Contract("score outside [0,1]".into()));
            }
        }
        Ok(resp.scores)
    }
}

/// Convenience wrapper: connect, then classify.
pub async fn classify_remote(
    texts: &[String],
    config: RemoteConfig,
    scheme: &CodingScheme,
) -> Result<Vec<ScoredLabels>, LabelingError> {
    RemoteClassifier::connect(config, scheme).await?.classify(texts).await
}

/// Labels scoring at least `threshold`, by descending score.
pub fn decode_scores(row: &[f64], labels: &[String], threshold: f64) -> ScoredLabels {
    let mut picked: Vec<(f64, usize)> = row
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= threshold)
        .map(|(i, &s)| (s, i))
        .collect();
    if picked.is_empty() {
        return ScoredLabels { labels: vec![FALLBACK_LABEL.to_string()], scores: None };
    }
    picked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    ScoredLabels {
        labels: picked.iter().map(|&(_, i)| labels[i].clone()).collect(),
        scores: Some(picked.iter().map(|&(s, _)| s).collect()),
    }
}

fn endpoint(base: &str, path: &str) -> String {
    format!("{}/{path}", base.trim_end_matches('/'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_decoding() {
        let labels: Vec<String> = ["Economic Policy", "Health Policy", "Others"].map(String::from).into();
        let d = decode_scores(&[0.6, 0.9, 0.2], &labels, 0.5);
        assert_eq!(d.labels, ["Health Policy", "Economic Policy"]);
        assert_eq!(d.scores, Some(vec![0.9, 0.6]));
        let none = decode_scores(&[0.1, 0.2, 0.3], &labels, 0.5);
        assert_eq!(none.labels, ["Not specified"]);
        assert_eq!(none.scores, None);
        assert_eq!(decode_scores(&[0.5, 0.0, 0.0], &labels, 0.5).labels, ["Economic Policy"]);
    }
}
