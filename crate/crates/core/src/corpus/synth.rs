//! Seeded synthetic panel populations.
//!
//! Personas are drawn variable by variable in [`Variable::ALL`] order. Each
//! draw starts from the configured marginal and is reweighted by every
//! dependency whose `given` variable was already drawn with `given_value`.
//! For each configured wave, a ground-truth coarse label is then drawn from
//! the first matching answer override (file order) or the default
//! distribution, and the answer text is a survey phrase for that label.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::answers::AnswerBank;
use super::demographics::{Age, AgeGroup, Variable};
use super::respondent::Respondent;
use super::scheme::CodingScheme;
use super::CorpusError;

const BUILTIN_POPULATION: &str = include_str!("../../data/population.toml");
const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub seed: u64,
    #[serde(default = "default_waves")]
    pub waves: Vec<u32>,
    pub marginals: BTreeMap<Variable, BTreeMap<String, f64>>,
    #[serde(default)]
    pub dependencies: Vec<Dependency>,
    pub answers: AnswerSpec,
}

fn default_waves() -> Vec<u32> {
    vec![12]
}

/// Multiplies the weight of `target = target_value` for personas that have
/// `given = given_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dependency {
    pub given: Variable,
    pub given_value: String,
    pub target: Variable,
    pub target_value: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerSpec {
    pub default: BTreeMap<String, f64>,
    #[serde(default, rename = "override")]
    pub overrides: Vec<AnswerOverride>,
}

/// Ground-truth answer distribution for a subgroup, a wave, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerOverride {
    pub variable: Option<Variable>,
    pub value: Option<String>,
    pub wave: Option<u32>,
    pub distribution: BTreeMap<String, f64>,
}

impl AnswerOverride {
    fn matches(&self, persona: &Respondent, wave: u32) -> bool {
        let wave_ok = self.wave.is_none_or(|w| w == wave);
        let group_ok = match (self.variable, self.value.as_deref()) {
            (Some(var), Some(value)) => persona.value_of(var) == var.canonical(value).ok(),
            _ => true,
        };
        wave_ok && group_ok
    }
}

/// Synthetic respondents plus the label each answer was drawn from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticPopulation {
    pub respondents: Vec<Respondent>,
    pub truth: Vec<String>,
}

impl PopulationSpec {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_POPULATION).expect("embedded population is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| CorpusError::io(path.as_ref(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CorpusError> {
        toml::from_str(text).map_err(|e| CorpusError::Config(e.to_string()))
    }

    pub fn validate(&self, scheme: &CodingScheme, bank: &AnswerBank) -> Result<(), CorpusError> {
        let err = |m: String| Err(CorpusError::InvalidPopulation(m));
        if self.waves.is_empty() {
            return err("at least one wave is required".into());
        }
        for var in Variable::ALL {
            let Some(m) = self.marginals.get(var) else {
                return err(format!("missing marginals for {var}"));
            };
            for (token, p) in m {
                if let Err(e) = var.canonical(token) {
                    return err(e.to_string());
                }
                if !(p.is_finite() && *p >= 0.0) {
                    return err(format!("{var}={token} has invalid probability {p}"));
                }
            }
            let total: f64 = m.values().sum();
            if (total - 1.0).abs() > SUM_TOLERANCE {
                return err(format!("marginals for {var} sum to {total}"));
            }
        }
        let order = |v: Variable| Variable::ALL.iter().position(|x| *x == v);
        for d in &self.dependencies {
            if order(d.given) >= order(d.target) {
                return err(format!("dependency {} -> {} must point forward", d.given, d.target));
            }
            for (var, value) in [(d.given, &d.given_value), (d.target, &d.target_value)] {
                if let Err(e) = var.canonical(value) {
                    return err(e.to_string());
                }
            }
            if !(d.weight.is_finite() && d.weight >= 0.0) {
                return err(format!("dependency weight {} is invalid", d.weight));
            }
        }
        let check_dist = |name: &str, dist: &BTreeMap<String, f64>| -> Result<(), CorpusError> {
            let total: f64 = dist.values().sum();
            if dist.values().all(|p| *p == 0.0) {
                return Err(CorpusError::InvalidPopulation(format!(
                    "answer distribution {name} has zero probability everywhere"
                )));
            }
            for (label, p) in dist {
                if !scheme.contains(label) {
                    return Err(CorpusError::InvalidPopulation(format!(
                        "answer distribution {name} uses unknown label {label:?}"
                    )));
                }
                if !(p.is_finite() && *p >= 0.0) {
                    return Err(CorpusError::InvalidPopulation(format!(
                        "answer distribution {name} has invalid probability {p}"
                    )));
                }
                if *p > 0.0 && bank.survey_phrases(label).is_none() {
                    return Err(CorpusError::InvalidPopulation(format!(
                        "no survey phrases for label {label:?}"
                    )));
                }
            }
            if (total - 1.0).abs() > SUM_TOLERANCE {
                return Err(CorpusError::InvalidPopulation(format!(
                    "answer distribution {name} sums to {total}"
                )));
            }
            Ok(())
        };
        check_dist("default", &self.answers.default)?;
        for (i, o) in self.answers.overrides.iter().enumerate() {
            if o.variable.is_some() != o.value.is_some() {
                return err(format!("override {i}: variable and value go together"));
            }
            if let (Some(var), Some(value)) = (o.variable, o.value.as_deref()) {
                if let Err(e) = var.canonical(value) {
                    return err(format!("override {i}: {e}"));
                }
            }
            check_dist(&format!("override {i}"), &o.distribution)?;
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return None;
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return Some(i);
        }
    }
    weights.iter().rposition(|w| *w > 0.0)
}

fn set_value(persona: &mut Respondent, var: Variable, token: &str) {
    // tokens come from Variable::domain, so parsing cannot fail
    match var {
        Variable::Age => persona.age = Some(Age::bracket(token.parse().unwrap())),
        Variable::Gender => persona.gender = Some(token.parse().unwrap()),
        Variable::LeaningParty => persona.leaning_party = Some(token.parse().unwrap()),
        Variable::Region => persona.region = Some(token.parse().unwrap()),
        Variable::EducationDegree => persona.education_degree = Some(token.parse().unwrap()),
        Variable::VocationalDegree => persona.vocational_degree = Some(token.parse().unwrap()),
    }
}

fn draw_persona(
    spec: &PopulationSpec,
    rng: &mut ChaCha8Rng,
    id: String,
) -> Result<Respondent, CorpusError> {
    let mut persona = Respondent {
        id,
        wave_id: 0,
        age: None,
        gender: None,
        leaning_party: None,
        region: None,
        education_degree: None,
        vocational_degree: None,
        answer_text: None,
    };
    for &var in Variable::ALL {
        let domain = var.domain();
        let marginal = &spec.marginals[&var];
        let weights: Vec<f64> = domain
            .iter()
            .map(|token| {
                let base = marginal
                    .iter()
                    .find(|(k, _)| var.canonical(k).ok() == Some(*token))
                    .map_or(0.0, |(_, p)| *p);
                spec.dependencies
                    .iter()
                    .filter(|d| d.target == var && d.target.canonical(&d.target_value).ok() == Some(*token))
                    .filter(|d| persona.value_of(d.given) == d.given.canonical(&d.given_value).ok())
                    .fold(base, |w, d| w * d.weight)
            })
            .collect();
        let idx = draw(rng, &weights).ok_or_else(|| {
            CorpusError::InvalidPopulation(format!("no admissible value for {var}"))
        })?;
        set_value(&mut persona, var, domain[idx]);
    }
    let group: AgeGroup = persona.age.expect("age drawn first").group;
    let (lo, hi) = group.year_range();
    persona.age = Age::exact(rng.gen_range(lo..=hi));
    Ok(persona)
}

/// Draw `n` personas and one answer per persona per configured wave.
///
/// Output is ordered by wave, then persona; persona ids are stable across
/// waves (`p00001`, …), as in a panel.
pub fn synthesize_population(
    spec: &PopulationSpec,
    n: usize,
    scheme: &CodingScheme,
    bank: &AnswerBank,
) -> Result<SyntheticPopulation, CorpusError> {
    if n == 0 {
        return Err(CorpusError::InvalidPopulation("population size must be at least 1".into()));
    }
    spec.validate(scheme, bank)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let personas = (1..=n)
        .map(|i| draw_persona(spec, &mut rng, format!("p{i:05}")))
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = SyntheticPopulation {
        respondents: Vec::with_capacity(n * spec.waves.len()),
        truth: Vec::with_capacity(n * spec.waves.len()),
    };
    for &wave in &spec.waves {
        for persona in &personas {
            let dist = spec
                .answers
                .overrides
                .iter()
                .find(|o| o.matches(persona, wave))
                .map_or(&spec.answers.default, |o| &o.distribution);
            let labels: Vec<&String> = dist.keys().collect();
            let weights: Vec<f64> = dist.values().copied().collect();
            let label = labels[draw(&mut rng, &weights).expect("validated distribution")].clone();
            let phrases = bank.survey_phrases(&label).expect("validated bank");
            let text = phrases[rng.gen_range(0..phrases.len())].clone();
            let mut r = persona.clone();
            r.wave_id = wave;
            r.answer_text = Some(text);
            out.respondents.push(r);
            out.truth.push(label);
        }
    }
    Ok(out)
}
