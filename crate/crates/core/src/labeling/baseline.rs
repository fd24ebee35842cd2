use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::corpus::CodingScheme;

use super::LabelingError;

const BUILTIN_LEXICON: &str = include_str!("../../data/lexicon.toml");

pub const FALLBACK_LABEL: &str = "Not specified";

/// Lowercase keyword stems per label, matched as substrings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    entries: Vec<(String, Vec<String>)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconFile {
    labels: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_LEXICON, &CodingScheme::builtin())
            .expect("embedded lexicon is valid")
    }

    pub fn load(path: impl AsRef<Path>, scheme: &CodingScheme) -> Result<Self, LabelingError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabelingError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml_str(&text, scheme)
    }

    /// Entries follow the scheme's label order; stems are lowercased.
    pub fn from_toml_str(text: &str, scheme: &CodingScheme) -> Result<Self, LabelingError> {
        let file: LexiconFile =
            toml::from_str(text).map_err(|e| LabelingError::Lexicon(e.to_string()))?;
        if let Some(bad) = file.labels.keys().find(|l| !scheme.contains(l)) {
            return Err(LabelingError::Lexicon(format!("label {bad:?} is not in the scheme")));
        }
        let mut entries = Vec::new();
        for label in scheme.all_labels() {
            if let Some(stems) = file.labels.get(label) {
                if stems.iter().any(|s| s.trim().is_empty()) {
                    return Err(LabelingError::Lexicon(format!("empty stem for {label:?}")));
                }
                entries.push((label.to_string(), stems.iter().map(|s| s.to_lowercase()).collect()));
            }
        }
        Ok(Lexicon { entries })
    }

    pub fn entries(&self) -> &[(String, Vec<String>)] {
        &self.entries
    }
}

/// Every label with at least one stem occurring in `text`, ordered by the
/// position of its earliest hit. Texts without a hit get "Not specified".
pub fn classify_baseline(text: &str, lexicon: &Lexicon) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut hits: Vec<(usize, usize, &str)> = lexicon
        .entries
        .iter()
        .enumerate()
        .filter_map(|(rank, (label, stems))| {
            stems.iter().filter_map(|s| lower.find(s.as_str())).min().map(|pos| (pos, rank, label.as_str()))
        })
        .collect();
    if hits.is_empty() {
        return vec![FALLBACK_LABEL.to_string()];
    }
    hits.sort_unstable();
    hits.into_iter().map(|(_, _, l)| l.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classify(t: &str) -> Vec<String> {
        classify_baseline(t, &Lexicon::builtin())
    }

    #[test]
    fn single_topic() {
        assert_eq!(classify("Klimawandel und Umweltschutz"), ["Environmental Policy"]);
    }

    #[test]
    fn empty_text_is_not_specified() {
        assert_eq!(classify(""), ["Not specified"]);
        assert_eq!(classify("   "), ["Not specified"]);
    }

    #[test]
    fn two_topics_in_text_order() {
        assert_eq!(classify("Migration und Rente"), ["Migration and Integration", "Social Policy"]);
        assert_eq!(classify("Rente und Migration"), ["Social Policy", "Migration and Integration"]);
    }

    #[test]
    fn case_insensitive() {
        assert_eq!(classify("KLIMA"), classify("klima"));
    }

    #[test]
    fn lexicon_rejects_unknown_label() {
        let err = Lexicon::from_toml_str("[labels]\nWeather = [\"regen\"]", &CodingScheme::builtin())
            .unwrap_err();
        assert!(err.to_string().contains("Weather"));
    }
}
