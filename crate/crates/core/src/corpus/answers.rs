use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::CorpusError;

const BUILTIN_ANSWERS: &str = include_str!("../../data/answers.toml");

/// Phrase banks keyed by coarse label.
///
/// `survey` phrases are short respondent-style answers; `llm` phrases are
/// noun phrases the mock backend wraps in a full sentence.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct AnswerBank {
    pub survey: BTreeMap<String, Vec<String>>,
    pub llm: BTreeMap<String, Vec<String>>,
}

impl AnswerBank {
    pub fn builtin() -> Self {
        toml::from_str(BUILTIN_ANSWERS).expect("embedded answer bank is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| CorpusError::io(path.as_ref(), e))?;
        toml::from_str(&text).map_err(|e| CorpusError::Config(e.to_string()))
    }

    pub fn survey_phrases(&self, label: &str) -> Option<&[String]> {
        self.survey.get(label).map(Vec::as_slice).filter(|v| !v.is_empty())
    }

    pub fn llm_phrases(&self, label: &str) -> Option<&[String]> {
        self.llm.get(label).map(Vec::as_slice).filter(|v| !v.is_empty())
    }
}
