use std::collections::BTreeMap;
use std::path::Path;

use async_trait::async_trait;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::corpus::AnswerBank;

use super::{BackendError, ChatBackend, ChatRequest, Completion, GenClientError};

const BUILTIN_MOCK: &str = include_str!("../../data/mock.toml");

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Cue {
    pub text: String,
    pub label: String,
    pub factor: f64,
}

/// Topic weights and persona cues driving [`MockBackend`].
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockProfile {
    pub refusal_rate: f64,
    pub intro_rate: f64,
    pub base: BTreeMap<String, f64>,
    #[serde(default, rename = "cue")]
    pub cues: Vec<Cue>,
}

impl MockProfile {
    pub fn builtin() -> Self {
        toml::from_str(BUILTIN_MOCK).expect("embedded mock profile is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GenClientError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GenClientError::Io { path: path.to_path_buf(), source: e })?;
        toml::from_str(&text).map_err(|e| GenClientError::Config(e.to_string()))
    }

    fn weights(&self, prompt: &str) -> Vec<(&str, f64)> {
        self.base
            .iter()
            .map(|(label, &w)| {
                let tilt: f64 = self
                    .cues
                    .iter()
                    .filter(|c| &c.label == label && prompt.contains(c.text.as_str()))
                    .map(|c| c.factor)
                    .product();
                (label.as_str(), w * tilt)
            })
            .collect()
    }
}

const INTRO: &str = "Das wichtigste Problem, mit dem Deutschland konfrontiert ist, ist ";
const REFUSAL: &str = "Als KI habe ich keine persönliche Meinung zu politischen Problemen.";
const FRAMES: [&str; 3] = [
    "{} ist derzeit die größte Herausforderung für Deutschland.",
    "{} bereitet den Menschen die größten Sorgen.",
    "{}.",
];

/// Offline backend whose answer is a pure function of (seed, model, prompt).
#[derive(Debug, Clone)]
pub struct MockBackend {
    seed: u64,
    profile: MockProfile,
    bank: AnswerBank,
}

impl MockBackend {
    pub fn new(seed: u64) -> Self {
        MockBackend { seed, profile: MockProfile::builtin(), bank: AnswerBank::builtin() }
    }

    pub fn with_profile(seed: u64, profile: MockProfile, bank: AnswerBank) -> Result<Self, GenClientError> {
        let total: f64 = profile.base.values().sum();
        if !(total > 0.0) || profile.base.values().any(|w| *w < 0.0) {
            return Err(GenClientError::Config("mock base weights must be non-negative with a positive sum".into()));
        }
        if let Some(l) = profile.base.keys().find(|l| bank.llm_phrases(l).is_none()) {
            return Err(GenClientError::Config(format!("no llm phrases for {l:?}")));
        }
        Ok(MockBackend { seed, profile, bank })
    }

    fn rng_for(&self, model: &str, prompt: &str) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(model.as_bytes());
        h.update([0]);
        h.update(prompt.as_bytes());
        ChaCha8Rng::from_seed(h.finalize().into())
    }

    pub fn answer(&self, model: &str, prompt: &str) -> String {
        let mut rng = self.rng_for(model, prompt);
        if rng.gen_bool(self.profile.refusal_rate.clamp(0.0, 1.0)) {
            return REFUSAL.to_string();
        }
        let weights = self.profile.weights(prompt);
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        let mut x = rng.gen::<f64>() * total;
        let mut label = weights[weights.len() - 1].0;
        for (l, w) in &weights {
            if x < *w {
                label = l;
                break;
            }
            x -= w;
        }
        let phrases = self.bank.llm_phrases(label).expect("checked at construction");
        let phrase = &phrases[rng.gen_range(0..phrases.len())];
        if rng.gen_bool(self.profile.intro_rate.clamp(0.0, 1.0)) {
            return format!("{INTRO}{phrase}.");
        }
        let frame = FRAMES[rng.gen_range(0..FRAMES.len())];
        frame.replacen("{}", &capitalize(phrase), 1)
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[async_trait]
impl ChatBackend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    async fn complete(&self, req: &ChatRequest) -> Result<Completion, BackendError> {
        Ok(Completion { text: self.answer(&req.model, &req.prompt), latency_ms: 0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_model_sensitive() {
        let m = MockBackend::new(7);
        assert_eq!(m.answer("a", "p"), m.answer("a", "p"));
        let differs = (0..20).any(|i| m.answer("a", &i.to_string()) != m.answer("b", &i.to_string()));
        assert!(differs);
    }

    #[test]
    fn cues_tilt_topics() {
        let m = MockBackend::new(1);
        let count = |prompt: &str| {
            (0..400)
                .filter(|i| {
                    let a = m.answer("m", &format!("{prompt} #{i}"));
                    a.contains("Zuwanderung") || a.contains("Flüchtling") || a.contains("Migration")
                })
                .count()
        };
        assert!(count("unterstützt hauptsächlich AfD") > 2 * count("unterstützt hauptsächlich SPD"));
    }

    #[test]
    fn builtin_profile_is_consistent() {
        let p = MockProfile::builtin();
        assert!(MockBackend::with_profile(0, p, AnswerBank::builtin()).is_ok());
    }
}
