//! Experiment orchestration: one wave across models, wave sweeps, prompt
//! ablations, survey drift and the survey resample baseline.

mod cells;
mod drift;
mod slices;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{
    load_respondents, synthesize_population, AnswerBank, CodingScheme, CorpusError,
    PopulationSpec, Respondent, Variable, WaveTable,
};
use crate::genclient::{
    generate_batch, hygiene_rates, BackendConfig, ChatBackend, GenClientError, GenerationOptions,
    GenerationRecord, HygieneLexicons,
};
use crate::labeling::{Classifier, LabeledResponse, LabelingError, RemoteConfig, Source};
use crate::metrics::{
    cohens_kappa, mean_defined, pearson_r, proportion_agreement, CellKey, LogBase, MetricReport,
};
use crate::persona::{enumerate_ablations, PersonaError, PromptRenderer, PromptVariant};

pub use cells::{fill_comparison, fill_survey_only, CellInput};
pub use drift::{survey_drift, survey_drift_from_labels, DriftMatrix};
pub use slices::{resample_survey_baseline, subgroup_slices};

/// Model label used for the survey resample baseline rows.
pub const RESAMPLE_MODEL: &str = "survey_resample";

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Persona(#[from] PersonaError),
    #[error(transparent)]
    Generation(#[from] GenClientError),
    #[error(transparent)]
    Labeling(#[from] LabelingError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ExperimentError {
    /// Whether the failure is a problem with the inputs rather than the run.
    pub fn is_validation(&self) -> bool {
        match self {
            ExperimentError::Config(_) | ExperimentError::Corpus(_) => true,
            ExperimentError::Persona(e) => !matches!(e, PersonaError::Io { .. }),
            ExperimentError::Generation(e) => matches!(e, GenClientError::Config(_) | GenClientError::EmptyBatch),
            ExperimentError::Labeling(e) => matches!(
                e,
                LabelingError::Config(_) | LabelingError::Lexicon(_) | LabelingError::RowLabel { .. }
            ),
            ExperimentError::Io { .. } => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    OneWaveMultiModel,
    WaveSweep,
    Ablation,
    SurveyDrift,
    ResampleBaseline,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::OneWaveMultiModel => "one_wave_multi_model",
            ExperimentKind::WaveSweep => "wave_sweep",
            ExperimentKind::Ablation => "ablation",
            ExperimentKind::SurveyDrift => "survey_drift",
            ExperimentKind::ResampleBaseline => "resample_baseline",
        }
    }

    fn generates(self) -> bool {
        matches!(self, ExperimentKind::OneWaveMultiModel | ExperimentKind::WaveSweep | ExperimentKind::Ablation)
    }
}

/// Where survey respondents come from: a CSV file, or a synthetic population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSource {
    #[serde(default)]
    pub respondents: Option<PathBuf>,
    #[serde(default)]
    pub spec: Option<PathBuf>,
    #[serde(default = "default_size")]
    pub size: usize,
    /// Overrides the population file's seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_size() -> usize {
    1000
}

impl Default for PopulationSource {
    fn default() -> Self {
        PopulationSource { respondents: None, spec: None, size: default_size(), seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClassifierConfig {
    #[default]
    Baseline,
    Remote(RemoteConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub waves: Vec<u32>,
    #[serde(default)]
    pub models: Vec<String>,
    #[serde(default)]
    pub variants: Vec<PromptVariant>,
    #[serde(default = "default_log_base")]
    pub js_log_base: LogBase,
    /// Stratification variables of the resample baseline; all six if empty.
    #[serde(default)]
    pub strata: Vec<Variable>,
    #[serde(default)]
    pub population: PopulationSource,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
}

fn default_log_base() -> LogBase {
    LogBase::Natural
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentSpec {
            kind,
            seed: 0,
            waves: Vec::new(),
            models: Vec::new(),
            variants: Vec::new(),
            js_log_base: default_log_base(),
            strata: Vec::new(),
            population: PopulationSource::default(),
            backend: BackendConfig::default(),
            classifier: ClassifierConfig::Baseline,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// Fills kind-dependent defaults and checks consistency.
    pub fn resolve(mut self, waves: &WaveTable) -> Result<Self, ExperimentError> {
        if self.waves.is_empty() {
            self.waves = match self.kind {
                ExperimentKind::WaveSweep | ExperimentKind::SurveyDrift => (12..=21).collect(),
                _ => vec![12],
            };
        }
        for &w in &self.waves {
            waves.get(w)?;
        }
        let mut sorted = self.waves.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.waves.len() {
            return Err(ExperimentError::Config("duplicate wave ids".into()));
        }
        if self.kind == ExperimentKind::SurveyDrift && self.waves.len() < 2 {
            return Err(ExperimentError::Config("survey_drift needs at least two waves".into()));
        }
        if self.models.is_empty() {
            self.models = vec!["mock".into()];
        }
        let ablations = enumerate_ablations();
        if self.kind == ExperimentKind::Ablation {
            let mut given = self.variants.clone();
            given.sort();
            let mut all = ablations.clone();
            all.sort();
            if !given.is_empty() && given != all {
                return Err(ExperimentError::Config("an ablation runs all 14 prompt variants".into()));
            }
            self.variants = ablations;
        } else if self.variants.is_empty() {
            self.variants = vec![PromptVariant::AllVars];
        }
        if self.strata.is_empty() {
            self.strata = Variable::ALL.to_vec();
        }
        if self.population.respondents.is_none() && self.population.size == 0 {
            return Err(ExperimentError::Config("population size must be at least 1".into()));
        }
        self.backend.validate()?;
        Ok(self)
    }

    /// Builds the classifier, connecting to the remote service if configured.
    pub async fn classifier(&self, scheme: &CodingScheme) -> Result<Classifier, ExperimentError> {
        Ok(match &self.classifier {
            ClassifierConfig::Baseline => Classifier::baseline(),
            ClassifierConfig::Remote(cfg) => Classifier::Remote(
                crate::labeling::RemoteClassifier::connect(cfg.clone(), scheme).await?,
            ),
        })
    }
}

/// Survey respondents plus the reference tables they are read against.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub respondents: Vec<Respondent>,
    pub waves: WaveTable,
    pub scheme: CodingScheme,
}

impl Corpus {
    /// Loads the configured respondent file, or synthesizes a population for
    /// the experiment's waves. Relative paths resolve against `base_dir`.
    pub fn for_spec(spec: &ExperimentSpec, base_dir: &Path) -> Result<Self, ExperimentError> {
        let scheme = CodingScheme::builtin();
        let waves = WaveTable::builtin();
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
        let respondents = match &spec.population.respondents {
            Some(path) => {
                let ingested = load_respondents(resolve(path))?;
                if ingested.dropped() > 0 {
                    tracing::info!(dropped = ingested.dropped(), "rows with missing fields dropped");
                }
                ingested.respondents
            }
            None => {
                let mut pop = match &spec.population.spec {
                    Some(path) => PopulationSpec::load(resolve(path))?,
                    None => PopulationSpec::builtin(),
                };
                pop.waves = spec.waves.clone();
                if let Some(seed) = spec.population.seed {
                    pop.seed = seed;
                }
                synthesize_population(&pop, spec.population.size, &scheme, &AnswerBank::builtin())?.respondents
            }
        };
        Ok(Corpus { respondents, waves, scheme })
    }

    pub fn in_wave(&self, wave: u32) -> Vec<Respondent> {
        self.respondents.iter().filter(|r| r.wave_id == wave).cloned().collect()
    }
}

/// One coded answer with its provenance, as persisted in `labels.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub wave_id: u32,
    /// Empty for survey answers.
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<PromptVariant>,
    #[serde(flatten)]
    pub response: LabeledResponse,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: MetricReport,
    pub records: Vec<GenerationRecord>,
    pub labels: Vec<LabelRow>,
}

async fn code_survey(
    respondents: &[Respondent],
    classifier: &Classifier,
) -> Result<HashMap<String, LabeledResponse>, ExperimentError> {
    let items: Vec<(String, String)> = respondents
        .iter()
        .filter_map(|r| r.answer_text.as_ref().map(|t| (r.id.clone(), t.clone())))
        .collect();
    let coded = classifier.label(&items, Source::Survey).await?;
    Ok(coded.into_iter().map(|l| (l.respondent_id.clone(), l)).collect())
}

/// Runs the experiment described by a resolved `spec`.
///
/// Cells with no respondents or no substantive answers carry undefined
/// metrics; the run continues.
pub async fn run_experiment(
    spec: &ExperimentSpec,
    corpus: &Corpus,
    backend: &dyn ChatBackend,
    classifier: &Classifier,
) -> Result<ExperimentOutput, ExperimentError> {
    let scheme = &corpus.scheme;
    let mut report = MetricReport::new(spec.kind.as_str());
    let mut records = Vec::new();
    let mut labels = Vec::new();
    let renderer = PromptRenderer::default();
    let lexicons = HygieneLexicons::builtin();

    let mut survey_by_wave: BTreeMap<u32, (Vec<Respondent>, HashMap<String, LabeledResponse>)> = BTreeMap::new();
    for &w in &spec.waves {
        let respondents = corpus.in_wave(w);
        let survey = code_survey(&respondents, classifier).await?;
        for r in &respondents {
            if let Some(l) = survey.get(&r.id) {
                labels.push(LabelRow { wave_id: w, model: String::new(), variant: None, response: l.clone() });
            }
        }
        survey_by_wave.insert(w, (respondents, survey));
    }

    match spec.kind {
        ExperimentKind::SurveyDrift => {
            let answers: Vec<(u32, LabeledResponse)> = survey_by_wave
                .iter()
                .flat_map(|(w, (rs, s))| rs.iter().filter_map(|r| s.get(&r.id).map(|l| (*w, l.clone()))))
                .collect();
            let m = survey_drift_from_labels(&spec.waves, &answers, scheme, spec.js_log_base)?;
            for (i, &later) in m.waves.iter().enumerate() {
                let (rs, s) = &survey_by_wave[&later];
                fill_survey_only(&mut report, &CellKey::new(Some(later), "", "", ""), rs, s, scheme);
                for (j, &earlier) in m.waves[..i].iter().enumerate() {
                    report.set(
                        CellKey::new(Some(later), "", "", &format!("vs_wave={earlier}")),
                        "js_distance",
                        m.js[i][j],
                    );
                }
            }
        }
        ExperimentKind::ResampleBaseline => {
            for (&w, (rs, s)) in &survey_by_wave {
                let items: Vec<(&Respondent, &LabeledResponse)> =
                    rs.iter().filter_map(|r| s.get(&r.id).map(|l| (r, l))).collect();
                let pairs = resample_survey_baseline(&items, &spec.strata, spec.seed ^ u64::from(w));
                let key = CellKey::new(Some(w), RESAMPLE_MODEL, "", "");
                report.set(key.clone(), "n", Some(items.len() as f64));
                report.set(key.clone(), "proportion_agreement", proportion_agreement(&pairs).ok());
                report.set(key, "cohens_kappa", cohens_kappa(&pairs).ok().flatten());
            }
        }
        _ => {}
    }

    if spec.kind.generates() {
        for model in &spec.models {
            let opts = GenerationOptions::from_config(model, &spec.backend, Some(spec.seed));
            for &variant in &spec.variants {
                for &w in &spec.waves {
                    let (respondents, survey) = &survey_by_wave[&w];
                    let key = CellKey::new(Some(w), model, &variant.to_string(), "");
                    if respondents.is_empty() {
                        report.set(key, "n", Some(0.0));
                        continue;
                    }
                    let wave = corpus.waves.get(w)?;
                    let prompts = respondents
                        .iter()
                        .map(|r| renderer.render(r, wave, variant))
                        .collect::<Result<Vec<_>, _>>()?;
                    let run = generate_batch(&prompts, backend, &opts, &lexicons).await?;
                    let ok: Vec<(String, String)> = run
                        .records
                        .iter()
                        .filter(|r| r.is_ok())
                        .map(|r| (r.respondent_id.clone(), r.raw_output.clone()))
                        .collect();
                    let coded = classifier.label(&ok, Source::Llm).await?;
                    let llm: HashMap<String, LabeledResponse> =
                        coded.iter().map(|l| (l.respondent_id.clone(), l.clone())).collect();
                    let input = CellInput { respondents, survey, llm: &llm };
                    fill_comparison(&mut report, &key, &input, scheme, spec.js_log_base);
                    let rates = hygiene_rates(&run.records)?;
                    for (name, v) in rates.named() {
                        report.set(key.clone(), name, Some(v));
                    }
                    report.set(key.clone(), "retries", Some(run.log.retries as f64));
                    report.set(key.clone(), "failures", Some(run.log.failures as f64));
                    labels.extend(coded.into_iter().map(|response| LabelRow {
                        wave_id: w,
                        model: model.clone(),
                        variant: Some(variant),
                        response,
                    }));
                    records.extend(run.records);
                }
            }
        }
        add_aggregates(&mut report, spec, scheme);
    }
    Ok(ExperimentOutput { report, records, labels })
}

/// Mean APE across waves and across models, and the wave-level correlation
/// between survey entropy and JS distance.
fn add_aggregates(report: &mut MetricReport, spec: &ExperimentSpec, scheme: &CodingScheme) {
    let get = |r: &MetricReport, w: u32, m: &str, v: &str, name: &str| {
        r.get(&CellKey::new(Some(w), m, v, ""), name).flatten()
    };
    let mut out = MetricReport::new(report.kind.clone());
    for variant in spec.variants.iter().map(ToString::to_string) {
        if spec.waves.len() > 1 {
            for model in &spec.models {
                let key = CellKey::new(None, model, &variant, "");
                for label in scheme.all_labels() {
                    let apes: Vec<Option<f64>> = spec
                        .waves
                        .iter()
                        .map(|&w| get(report, w, model, &variant, &format!("ape:{label}")))
                        .collect();
                    out.set(key.clone(), &format!("mean_ape:{label}"), mean_defined(&apes));
                }
                let pts: Vec<(f64, f64)> = spec
                    .waves
                    .iter()
                    .filter_map(|&w| {
                        Some((
                            get(report, w, model, &variant, "entropy_survey")?,
                            get(report, w, model, &variant, "js_distance")?,
                        ))
                    })
                    .collect();
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                out.set(key, "pearson_entropy_survey_js", pearson_r(&xs, &ys).ok());
            }
        }
        if spec.models.len() > 1 {
            for &w in &spec.waves {
                let key = CellKey::new(Some(w), "", &variant, "");
                for label in scheme.all_labels() {
                    let apes: Vec<Option<f64>> = spec
                        .models
                        .iter()
                        .map(|m| get(report, w, m, &variant, &format!("ape:{label}")))
                        .collect();
                    out.set(key.clone(), &format!("mean_ape:{label}"), mean_defined(&apes));
                }
            }
        }
    }
    report.merge(&out);
}

/// Convenience entry: resolve, build corpus, backend and classifier, run.
pub async fn run_from_spec(spec: ExperimentSpec, base_dir: &Path) -> Result<(ExperimentSpec, ExperimentOutput), ExperimentError> {
    let spec = spec.resolve(&WaveTable::builtin())?;
    let corpus = Corpus::for_spec(&spec, base_dir)?;
    let backend = spec.backend.build(spec.seed)?;
    let classifier = spec.classifier(&corpus.scheme).await?;
    let out = run_experiment(&spec, &corpus, backend.as_ref(), &classifier).await?;
    Ok((spec, out))
}
