//! Coding free-text answers into coarse labels.

mod annotations;
mod baseline;
mod remote;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::CodingScheme;

pub use annotations::{load_annotations, read_annotations, Annotation};
pub use baseline::{classify_baseline, Lexicon, FALLBACK_LABEL};
pub use remote::{
    classify_remote, decode_scores, RemoteClassifier, RemoteConfig, ScoredLabels,
    DEFAULT_THRESHOLD,
};

#[derive(Debug, thiserror::Error)]
pub enum LabelingError {
    #[error("classifier transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("classifier contract violated: {0}")]
    Contract(String),
    #[error("classifier config: {0}")]
    Config(String),
    #[error("lexicon: {0}")]
    Lexicon(String),
    #[error("row {row}: label {token:?} is not in the coding scheme")]
    RowLabel { row: usize, token: String },
    #[error("row {row}: unknown source {token:?}")]
    RowSource { row: usize, token: String },
    #[error("schema error: missing column {0:?}")]
    MissingColumn(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Where an answer came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Survey,
    Llm,
}

/// A coded answer. `labels` is non-empty and ordered with the primary label
/// first; `scores`, when present, is aligned with `labels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledResponse {
    pub respondent_id: String,
    pub source: Source,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

impl LabeledResponse {
    pub fn new(respondent_id: impl Into<String>, source: Source, labels: Vec<String>) -> Self {
        LabeledResponse {
            respondent_id: respondent_id.into(),
            source,
            labels,
            scores: None,
        }
    }

    pub fn primary(&self) -> &str {
        &self.labels[0]
    }
}

/// Either the built-in keyword baseline or a connected remote service.
#[derive(Debug, Clone)]
pub enum Classifier {
    Baseline(Lexicon),
    Remote(RemoteClassifier),
}

impl Classifier {
    pub fn baseline() -> Self {
        Classifier::Baseline(Lexicon::builtin())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Classifier::Baseline(_) => "baseline",
            Classifier::Remote(_) => "remote",
        }
    }

    /// Codes `texts` (paired with respondent ids) into labeled responses.
    pub async fn label(
        &self,
        items: &[(String, String)],
        source: Source,
    ) -> Result<Vec<LabeledResponse>, LabelingError> {
        match self {
            Classifier::Baseline(lex) => Ok(items
                .iter()
                .map(|(id, text)| LabeledResponse::new(id.clone(), source, classify_baseline(text, lex)))
                .collect()),
            Classifier::Remote(remote) => {
                let texts: Vec<String> = items.iter().map(|(_, t)| t.clone()).collect();
                let decoded = remote.classify(&texts).await?;
                Ok(items
                    .iter()
                    .zip(decoded)
                    .map(|((id, _), d)| LabeledResponse {
                        respondent_id: id.clone(),
                        source,
                        labels: d.labels,
                        scores: d.scores,
                    })
                    .collect())
            }
        }
    }
}

/// Checks a label set against the scheme.
pub fn validate_labels(labels: &[String], scheme: &CodingScheme) -> Result<(), LabelingError> {
    if labels.is_empty() {
        return Err(LabelingError::Contract("empty label set".into()));
    }
    match labels.iter().find(|l| !scheme.contains(l)) {
        Some(bad) => Err(LabelingError::Contract(format!("label {bad:?} is not in the scheme"))),
        None => Ok(()),
    }
}
