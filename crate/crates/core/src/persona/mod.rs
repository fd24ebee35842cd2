//! German persona prompts and their ablation variants.

mod clauses;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Respondent, Variable, Wave};

pub use clauses::{ClauseTable, GenderClause};

#[derive(Debug, thiserror::Error)]
pub enum PersonaError {
    #[error("respondent {respondent}: variant {variant} needs {variable}, which is missing")]
    MissingVariable { respondent: String, variant: PromptVariant, variable: Variable },
    #[error("wave mismatch: respondent {respondent} is in wave {respondent_wave}, prompt asked for wave {wave}")]
    WaveMismatch { respondent: String, respondent_wave: u32, wave: u32 },
    #[error("unknown prompt variant {0:?}")]
    UnknownVariant(String),
    #[error("clause table: {0}")]
    ClauseTable(String),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Which demographic variables a prompt discloses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PromptVariant {
    AllVars,
    Base,
    OneVar(Variable),
    WithoutVar(Variable),
}

impl PromptVariant {
    pub fn includes(self, v: Variable) -> bool {
        match self {
            PromptVariant::AllVars => true,
            PromptVariant::Base => false,
            PromptVariant::OneVar(only) => only == v,
            PromptVariant::WithoutVar(dropped) => dropped != v,
        }
    }

    pub fn variables(self) -> Vec<Variable> {
        Variable::ALL.iter().copied().filter(|&v| self.includes(v)).collect()
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PromptVariant::AllVars => f.write_str("all_vars"),
            PromptVariant::Base => f.write_str("base"),
            PromptVariant::OneVar(v) => write!(f, "1_var_{}", v.variant_token()),
            PromptVariant::WithoutVar(v) => write!(f, "without_{}", v.variant_token()),
        }
    }
}

impl FromStr for PromptVariant {
    type Err = PersonaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || PersonaError::UnknownVariant(s.to_string());
        match s {
            "all_vars" => return Ok(PromptVariant::AllVars),
            "base" => return Ok(PromptVariant::Base),
            _ => {}
        }
        let (ctor, token): (fn(Variable) -> PromptVariant, &str) =
            if let Some(t) = s.strip_prefix("1_var_") {
                (PromptVariant::OneVar, t)
            } else if let Some(t) = s.strip_prefix("without_") {
                (PromptVariant::WithoutVar, t)
            } else {
                return Err(unknown());
            };
        let v = token.parse::<Variable>().map_err(|_| unknown())?;
        Ok(ctor(v))
    }
}

impl Serialize for PromptVariant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PromptVariant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The 14 variants of the ablation study: full, base, six single-variable
/// and six leave-one-out prompts.
pub fn enumerate_ablations() -> Vec<PromptVariant> {
    let mut out = vec![PromptVariant::AllVars, PromptVariant::Base];
    out.extend(Variable::ALL.iter().map(|&v| PromptVariant::OneVar(v)));
    out.extend(Variable::ALL.iter().map(|&v| PromptVariant::WithoutVar(v)));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub respondent_id: String,
    pub wave_id: u32,
    pub variant: PromptVariant,
    pub text: String,
}

const INSTRUCTION: &str = "Identifizieren Sie das wichtigste Problem, mit dem Deutschland im {month} {year} konfrontiert ist. \
Geben Sie die Antwort in einem prägnanten Satz an, konzentrieren Sie sich nur auf ein einziges Thema ohne weitere Ausführungen oder Auflistung zusätzlicher Probleme. \
Wiederholen Sie nicht die Informationen die Ihnen gegeben wurden, und geben Sie Ihre Antwort direkt und ohne einleitende Phrasen. \
Antworten Sie auf Deutsch und ausschließlich auf Deutsch, verwenden Sie keine Englische Sprache. \
Antworten Sie aus der Sicht eines Befragten mit deutscher Staatsbürgerschaft";

const WITH_PROPERTIES: &str = " und den im nachfolgenden spezifizierten Eigenschaften.";

const NEUTRAL_ARTIKEL: &str = "Der/Die";
const NEUTRAL_PRONOUN: &str = "Er/Sie";

/// Renders prompts with a fixed clause table.
#[derive(Debug, Clone)]
pub struct PromptRenderer {
    clauses: ClauseTable,
}

impl Default for PromptRenderer {
    fn default() -> Self {
        PromptRenderer { clauses: ClauseTable::builtin() }
    }
}

/// Clause strings of one respondent, `None` where the variant hides them.
struct Slots<'a> {
    age: Option<u32>,
    gender: Option<&'a GenderClause>,
    education: Option<&'a str>,
    vocational: Option<&'a str>,
    region: Option<&'a str>,
    party: Option<&'a str>,
}

impl PromptRenderer {
    pub fn new(clauses: ClauseTable) -> Self {
        PromptRenderer { clauses }
    }

    pub fn clauses(&self) -> &ClauseTable {
        &self.clauses
    }

    pub fn render(
        &self,
        r: &Respondent,
        wave: &Wave,
        variant: PromptVariant,
    ) -> Result<RenderedPrompt, PersonaError> {
        if r.wave_id != wave.id {
            return Err(PersonaError::WaveMismatch {
                respondent: r.id.clone(),
                respondent_wave: r.wave_id,
                wave: wave.id,
            });
        }
        let slots = self.slots(r, variant)?;
        let mut text = INSTRUCTION.replace("{month}", wave.month()).replace("{year}", &wave.year());
        match persona_sentences(&slots, variant) {
            Some(persona) => {
                text.push_str(WITH_PROPERTIES);
                text.push_str("\n\n");
                text.push_str(&persona);
            }
            None => text.push('.'),
        }
        Ok(RenderedPrompt { respondent_id: r.id.clone(), wave_id: wave.id, variant, text })
    }

    fn slots(&self, r: &Respondent, variant: PromptVariant) -> Result<Slots<'_>, PersonaError> {
        let missing = |variable| PersonaError::MissingVariable {
            respondent: r.id.clone(),
            variant,
            variable,
        };
        macro_rules! slot {
            ($var:expr, $field:expr, $map:expr) => {
                if variant.includes($var) {
                    Some($field.map($map).ok_or_else(|| missing($var))?)
                } else {
                    None
                }
            };
        }
        let c = &self.clauses;
        Ok(Slots {
            age: slot!(Variable::Age, r.age, |a| a.prompt_years()),
            gender: slot!(Variable::Gender, r.gender, |g| c.gender(g)),
            education: slot!(Variable::EducationDegree, r.education_degree, |e| c.education(e)),
            vocational: slot!(Variable::VocationalDegree, r.vocational_degree, |v| c.vocational(v)),
            region: slot!(Variable::Region, r.region, |x| c.region(x)),
            party: slot!(Variable::LeaningParty, r.leaning_party, |p| c.party(p)),
        })
    }
}

fn persona_sentences(s: &Slots<'_>, variant: PromptVariant) -> Option<String> {
    let who = NEUTRAL_ARTIKEL;
    match variant {
        PromptVariant::Base => None,
        PromptVariant::OneVar(Variable::Gender) => {
            let g = s.gender?;
            Some(format!("{} Befragte ist {}.", g.artikel, g.adjective))
        }
        PromptVariant::OneVar(v) => Some(match v {
            Variable::Age => format!("{who} Befragte ist {} Jahre alt.", s.age?),
            Variable::EducationDegree => format!("{who} Befragte {}.", s.education?),
            Variable::VocationalDegree => format!("{who} Befragte {}.", s.vocational?),
            Variable::Region => format!("{who} Befragte lebt in {}.", s.region?),
            Variable::LeaningParty => format!("{who} Befragte unterstützt hauptsächlich {}.", s.party?),
            Variable::Gender => unreachable!(),
        }),
        PromptVariant::AllVars | PromptVariant::WithoutVar(_) => Some(full_persona(s)),
    }
}

/// Three-sentence persona; each sentence shrinks to whatever slots remain.
fn full_persona(s: &Slots<'_>) -> String {
    let (artikel, pronoun) = match s.gender {
        Some(g) => (g.artikel.as_str(), g.pronoun.as_str()),
        None => (NEUTRAL_ARTIKEL, NEUTRAL_PRONOUN),
    };
    let mut sentences = Vec::with_capacity(3);

    let first = match (s.age, s.gender) {
        (Some(age), Some(g)) => Some(format!("{artikel} Befragte ist {age} Jahre alt und {}.", g.adjective)),
        (Some(age), None) => Some(format!("{artikel} Befragte ist {age} Jahre alt.")),
        (None, Some(g)) => Some(format!("{artikel} Befragte ist {}.", g.adjective)),
        (None, None) => None,
    };
    sentences.extend(first);

    let second = match (s.education, s.vocational) {
        (Some(e), Some(v)) => Some(format!("{pronoun} {e} und {v}.")),
        (Some(x), None) | (None, Some(x)) => Some(format!("{pronoun} {x}.")),
        (None, None) => None,
    };
    sentences.extend(second);

    let third = match (s.region, s.party) {
        (Some(r), Some(p)) => Some(format!("{pronoun} lebt in {r} und unterstützt hauptsächlich {p}.")),
        (Some(r), None) => Some(format!("{pronoun} lebt in {r}.")),
        (None, Some(p)) => Some(format!("{pronoun} unterstützt hauptsächlich {p}.")),
        (None, None) => None,
    };
    sentences.extend(third);

    sentences.join(" ")
}

/// Renders `respondents` under every variant in `variants`, looking up each
/// respondent's wave in `waves`.
pub fn render_all(
    renderer: &PromptRenderer,
    respondents: &[Respondent],
    waves: &crate::corpus::WaveTable,
    variants: &[PromptVariant],
) -> Result<Vec<RenderedPrompt>, RenderAllError> {
    let mut out = Vec::with_capacity(respondents.len() * variants.len());
    for &variant in variants {
        for r in respondents {
            let wave = waves.get(r.wave_id)?;
            out.push(renderer.render(r, wave, variant)?);
        }
    }
    Ok(out)
}

#[derive(Debug, thiserror::Error)]
pub enum RenderAllError {
    #[error(transparent)]
    Persona(#[from] PersonaError),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
}
