use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::Deserialize;

use super::CorpusError;

const BUILTIN_SCHEME: &str = include_str!("../../data/scheme.toml");

/// Fine → coarse answer coding taxonomy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingScheme {
    fine_labels: Vec<String>,
    coarse_labels: Vec<String>,
    non_substantive: Vec<String>,
    fine_to_coarse: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeFile {
    coarse_labels: Vec<String>,
    non_substantive: Vec<String>,
    fine_labels: Vec<String>,
    fine_to_coarse: BTreeMap<String, String>,
}

pub const COARSE_CLASS_COUNT: usize = 16;

impl CodingScheme {
    /// The shipped 16-class scheme.
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_SCHEME).expect("embedded scheme is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| CorpusError::io(path.as_ref(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CorpusError> {
        let f: SchemeFile = toml::from_str(text).map_err(|e| CorpusError::Config(e.to_string()))?;
        let scheme = CodingScheme {
            fine_labels: f.fine_labels,
            coarse_labels: f.coarse_labels,
            non_substantive: f.non_substantive,
            fine_to_coarse: f.fine_to_coarse,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |m: String| Err(CorpusError::InvalidScheme(m));
        if self.coarse_labels.len() != COARSE_CLASS_COUNT {
            return invalid(format!(
                "expected {COARSE_CLASS_COUNT} coarse labels, found {}",
                self.coarse_labels.len()
            ));
        }
        for list in [&self.fine_labels, &self.coarse_labels, &self.non_substantive] {
            let mut seen = HashSet::new();
            if let Some(dup) = list.iter().find(|l| !seen.insert(l.as_str())) {
                return invalid(format!("duplicate label {dup:?}"));
            }
        }
        for fine in &self.fine_labels {
            let Some(coarse) = self.fine_to_coarse.get(fine) else {
                return invalid(format!("fine label {fine:?} has no coarse mapping"));
            };
            if !self.contains(coarse) {
                return invalid(format!("{fine:?} maps to unknown label {coarse:?}"));
            }
        }
        if let Some(extra) = self
            .fine_to_coarse
            .keys()
            .find(|k| !self.fine_labels.contains(k))
        {
            return invalid(format!("mapping for undeclared fine label {extra:?}"));
        }
        Ok(())
    }

    pub fn fine_labels(&self) -> &[String] {
        &self.fine_labels
    }

    pub fn coarse_labels(&self) -> &[String] {
        &self.coarse_labels
    }

    pub fn non_substantive(&self) -> &[String] {
        &self.non_substantive
    }

    /// Coarse labels minus the non-substantive ones, in scheme order.
    pub fn substantive_labels(&self) -> Vec<&str> {
        self.coarse_labels
            .iter()
            .filter(|l| !self.non_substantive.contains(l))
            .map(String::as_str)
            .collect()
    }

    /// Every label a coded answer may carry: coarse labels followed by any
    /// non-substantive label not already among them.
    pub fn all_labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.coarse_labels.iter().map(String::as_str).collect();
        for l in &self.non_substantive {
            if !out.contains(&l.as_str()) {
                out.push(l);
            }
        }
        out
    }

    pub fn contains(&self, label: &str) -> bool {
        self.coarse_labels.iter().any(|l| l == label) || self.non_substantive.iter().any(|l| l == label)
    }

    pub fn is_substantive(&self, label: &str) -> bool {
        self.contains(label) && !self.non_substantive.iter().any(|l| l == label)
    }

    pub fn coarsen(&self, fine: &str) -> Result<&str, CorpusError> {
        self.fine_to_coarse
            .get(fine)
            .map(String::as_str)
            .ok_or_else(|| CorpusError::UnknownLabel(fine.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_shape() {
        let s = CodingScheme::builtin();
        assert_eq!(s.coarse_labels().len(), 16);
        assert_eq!(s.substantive_labels().len(), 14);
        assert_eq!(s.all_labels().len(), 17);
        assert!(!s.is_substantive("Not specified"));
        assert!(!s.is_substantive("LLM Refusal"));
        assert!(s.is_substantive("Security"));
    }

    #[test]
    fn coarsening_examples() {
        let s = CodingScheme::builtin();
        assert_eq!(s.coarsen("Climate Policy").unwrap(), "Environmental Policy");
        assert_eq!(s.coarsen("Corona Pandemic").unwrap(), "Health Policy");
        assert_eq!(s.coarsen("East Germany").unwrap(), "East Germany");
        assert!(matches!(s.coarsen("Weather"), Err(CorpusError::UnknownLabel(_))));
    }

    #[test]
    fn every_fine_label_lands_in_scheme() {
        let s = CodingScheme::builtin();
        for f in s.fine_labels() {
            assert!(s.contains(s.coarsen(f).unwrap()));
        }
    }

    #[test]
    fn partial_map_rejected() {
        let text = BUILTIN_SCHEME.replace("\"Defense\" = \"Security\"\n", "");
        assert!(matches!(
            CodingScheme::from_toml_str(&text),
            Err(CorpusError::InvalidScheme(m)) if m.contains("Defense")
        ));
    }
}
