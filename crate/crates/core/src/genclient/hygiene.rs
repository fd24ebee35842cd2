use std::collections::HashSet;
use std::path::Path;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use super::{GenClientError, GenerationRecord};

const BUILTIN_HYGIENE: &str = include_str!("../../data/hygiene.toml");

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HygieneFile {
    covid_patterns: Vec<String>,
    refusal_phrases: Vec<String>,
    intro_phrases: Vec<String>,
    german_stopwords: Vec<String>,
    english_stopwords: Vec<String>,
}

/// Word lists and patterns behind [`analyze_hygiene`].
#[derive(Debug, Clone)]
pub struct HygieneLexicons {
    covid: Vec<Regex>,
    refusal: Vec<String>,
    intro: Vec<String>,
    german: HashSet<String>,
    english: HashSet<String>,
}

impl HygieneLexicons {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_HYGIENE).expect("embedded hygiene lexicons are valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GenClientError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GenClientError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, GenClientError> {
        let f: HygieneFile =
            toml::from_str(text).map_err(|e| GenClientError::Config(e.to_string()))?;
        let covid = f
            .covid_patterns
            .iter()
            .map(|p| RegexBuilder::new(p).case_insensitive(true).build())
            .collect::<Result<_, _>>()
            .map_err(|e| GenClientError::Config(e.to_string()))?;
        fn lower<C: FromIterator<String>>(v: Vec<String>) -> C {
            v.into_iter().map(|s| s.to_lowercase()).collect()
        }
        Ok(HygieneLexicons {
            covid,
            refusal: lower(f.refusal_phrases),
            intro: lower(f.intro_phrases),
            german: lower(f.german_stopwords),
            english: lower(f.english_stopwords),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HygieneFlags {
    pub is_non_german: bool,
    pub is_non_response: bool,
    pub is_refusal: bool,
    pub covid_match: bool,
    pub has_intro_phrase: bool,
    pub word_count: usize,
}

pub fn analyze_hygiene(text: &str, lex: &HygieneLexicons) -> HygieneFlags {
    let lower = text.to_lowercase();
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let words: HashSet<String> = lower
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_string())
        .filter(|w| !w.is_empty())
        .collect();
    let german_hits = words.iter().filter(|w| lex.german.contains(*w)).count();
    let english_hits = words.iter().filter(|w| lex.english.contains(*w)).count();
    let opening = lower.trim_start_matches(|c: char| c.is_whitespace() || "\"'„“»«".contains(c));
    HygieneFlags {
        is_non_german: german_hits < 2 && english_hits >= 2,
        is_non_response: tokens.is_empty(),
        is_refusal: lex.refusal.iter().any(|p| lower.contains(p.as_str())),
        covid_match: lex.covid.iter().any(|re| re.is_match(text)),
        has_intro_phrase: lex.intro.iter().any(|p| opening.starts_with(p.as_str())),
        word_count: tokens.len(),
    }
}

/// Per-flag sample means over a set of records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HygieneRates {
    pub n: usize,
    pub non_german: f64,
    pub non_response: f64,
    pub refusal: f64,
    pub covid: f64,
    pub intro_phrase: f64,
    pub avg_word_count: f64,
}

impl HygieneRates {
    /// `(metric name, value)` pairs in a fixed order.
    pub fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("non_german_rate", self.non_german),
            ("non_response_rate", self.non_response),
            ("refusal_rate", self.refusal),
            ("covid_rate", self.covid),
            ("intro_phrase_rate", self.intro_phrase),
            ("avg_word_count", self.avg_word_count),
        ]
    }
}

pub fn hygiene_rates(records: &[GenerationRecord]) -> Result<HygieneRates, GenClientError> {
    flag_rates(records.iter().map(|r| &r.hygiene))
}

pub fn flag_rates<'a>(flags: impl IntoIterator<Item = &'a HygieneFlags>) -> Result<HygieneRates, GenClientError> {
    let flags: Vec<&HygieneFlags> = flags.into_iter().collect();
    if flags.is_empty() {
        return Err(GenClientError::EmptyBatch);
    }
    let n = flags.len() as f64;
    let rate = |f: fn(&HygieneFlags) -> bool| flags.iter().filter(|x| f(x)).count() as f64 / n;
    Ok(HygieneRates {
        n: flags.len(),
        non_german: rate(|f| f.is_non_german),
        non_response: rate(|f| f.is_non_response),
        refusal: rate(|f| f.is_refusal),
        covid: rate(|f| f.covid_match),
        intro_phrase: rate(|f| f.has_intro_phrase),
        avg_word_count: flags.iter().map(|f| f.word_count as f64).sum::<f64>() / n,
    })
}
