use std::path::Path;

use anyhow::anyhow;
use serde_json::json;

use fidelity_core::corpus::{
    load_respondents, synthesize_population, write_respondents, AnswerBank, CodingScheme, PopulationSpec,
    WaveTable,
};
use fidelity_core::experiments::{run_from_spec, ExperimentKind, ExperimentOutput, ExperimentSpec, LabelRow};
use fidelity_core::genclient::{
    generate_batch, load_records, BackendConfig, BackendKind, GenClientError, GenerationOptions, HygieneLexicons,
};
use fidelity_core::labeling::{Classifier, RemoteClassifier, RemoteConfig, Source};
use fidelity_core::metrics::MetricReport;
use fidelity_core::persona::{enumerate_ablations, render_all, PromptRenderer, PromptVariant, RenderedPrompt};
use fidelity_core::report::{emit_plots, render_tables, FigureKind, ReportError, TableFormat};

use crate::failure::{Classify, Failure, Outcome};
use crate::run_dir::RunDir;
use crate::{BackendArgs, Command, RunArgs};

pub async fn dispatch(command: Command) -> Outcome<()> {
    match command {
        Command::Ingest { input, out } => ingest(&input, &out),
        Command::Synth { population, size, seed, waves, out } => synth(population.as_deref(), size, seed, waves, &out),
        Command::RenderPrompts { respondents, variants, ablations, out } => {
            render_prompts(&respondents, &variants, ablations, &out)
        }
        Command::Generate { prompts, model, seed, backend, out } => generate(&prompts, &model, seed, &backend, &out).await,
        Command::Classify { records, respondents, classifier_url, out } => {
            classify(records.as_deref(), respondents.as_deref(), classifier_url, &out).await
        }
        Command::Evaluate(args) => run(args, "evaluate", None).await,
        Command::Ablate(args) => run(args, "ablate", Some(ExperimentKind::Ablation)).await,
        Command::Drift(args) => run(args, "drift", Some(ExperimentKind::SurveyDrift)).await,
        Command::Report { run, figure, format, out } => report(&run, &figure, &format, out.as_deref()),
    }
}

fn require_file(path: &Path) -> Outcome<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Validation(anyhow!("{}: no such file", path.display())))
    }
}

fn csv_bytes(respondents: &[fidelity_core::corpus::Respondent]) -> Outcome<Vec<u8>> {
    let mut buf = Vec::new();
    write_respondents(&mut buf, respondents).runtime()?;
    Ok(buf)
}

fn ingest(input: &Path, out: &Path) -> Outcome<()> {
    require_file(input)?;
    let ingested = load_respondents(input)?;
    if ingested.respondents.is_empty() {
        return Err(Failure::Validation(anyhow!("{}: no usable rows", input.display())));
    }
    let dir = RunDir::create(out).runtime()?;
    dir.write("respondents.csv", csv_bytes(&ingested.respondents)?).runtime()?;
    let summary = json!({
        "rows": ingested.respondents.len(),
        "dropped_rows": ingested.dropped_rows,
    });
    dir.write("ingest.json", serde_json::to_string_pretty(&summary).runtime()? + "\n").runtime()?;
    dir.finish("ingest", &json!({ "input": input.display().to_string() })).runtime()?;
    eprintln!("ingested {} respondents, dropped {}", ingested.respondents.len(), ingested.dropped());
    Ok(())
}

fn synth(population: Option<&Path>, size: usize, seed: Option<u64>, waves: Vec<u32>, out: &Path) -> Outcome<()> {
    let mut pop = match population {
        Some(p) => {
            require_file(p)?;
            PopulationSpec::load(p)?
        }
        None => PopulationSpec::builtin(),
    };
    if let Some(seed) = seed {
        pop.seed = seed;
    }
    if !waves.is_empty() {
        pop.waves = waves;
    }
    let table = WaveTable::builtin();
    for &w in &pop.waves {
        table.get(w)?;
    }
    let synthetic = synthesize_population(&pop, size, &CodingScheme::builtin(), &AnswerBank::builtin())?;
    let dir = RunDir::create(out).runtime()?;
    dir.write("respondents.csv", csv_bytes(&synthetic.respondents)?).runtime()?;
    let config = serde_json::to_value(&pop).runtime()?;
    dir.finish("synth", &json!({ "population": config, "size": size })).runtime()?;
    Ok(())
}

fn parse_variants(ids: &[String], ablations: bool) -> Outcome<Vec<PromptVariant>> {
    if ablations {
        return Ok(enumerate_ablations());
    }
    ids.iter().map(|id| id.parse::<PromptVariant>().validation()).collect()
}

fn render_prompts(respondents: &Path, variants: &[String], ablations: bool, out: &Path) -> Outcome<()> {
    require_file(respondents)?;
    let variants = parse_variants(variants, ablations)?;
    let people = load_respondents(respondents)?.respondents;
    let prompts = render_all(&PromptRenderer::default(), &people, &WaveTable::builtin(), &variants).validation()?;
    let dir = RunDir::create(out).runtime()?;
    dir.write_jsonl("prompts.jsonl", &prompts).runtime()?;
    let ids: Vec<String> = variants.iter().map(ToString::to_string).collect();
    dir.finish("render-prompts", &json!({ "respondents": respondents.display().to_string(), "variants": ids }))
        .runtime()?;
    Ok(())
}

fn read_prompts(path: &Path) -> Outcome<Vec<RenderedPrompt>> {
    require_file(path)?;
    let text = std::fs::read_to_string(path).runtime()?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Failure::Validation(anyhow!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn backend_config(args: &BackendArgs) -> Outcome<BackendConfig> {
    let mut cfg = match &args.backend_config {
        Some(p) => {
            require_file(p)?;
            let text = std::fs::read_to_string(p).runtime()?;
            toml::from_str::<BackendConfig>(&text).validation()?
        }
        None => BackendConfig::default(),
    };
    if let Some(url) = &args.base_url {
        cfg.kind = BackendKind::Openai;
        cfg.base_url = Some(url.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

async fn generate(prompts: &Path, model: &str, seed: u64, args: &BackendArgs, out: &Path) -> Outcome<()> {
    let prompts = read_prompts(prompts)?;
    let cfg = backend_config(args)?;
    let backend = cfg.build(seed)?;
    let opts = GenerationOptions::from_config(model, &cfg, Some(seed));
    let dir = RunDir::create(out).runtime()?;
    let config = json!({ "model": model, "seed": seed, "backend": serde_json::to_value(&cfg).runtime()? });
    match generate_batch(&prompts, backend.as_ref(), &opts, &HygieneLexicons::builtin()).await {
        Ok(run) => {
            dir.write_jsonl("records.jsonl", &run.records).runtime()?;
            dir.write("generation.json", serde_json::to_string_pretty(&run.log).runtime()? + "\n").runtime()?;
            dir.finish("generate", &config).runtime()?;
            Ok(())
        }
        Err(GenClientError::Unreachable { failed, total, last_error, records, log }) => {
            // keep what was produced so the failure can be inspected
            dir.write_jsonl("records.jsonl", &records).runtime()?;
            dir.write("generation.json", serde_json::to_string_pretty(&log).runtime()? + "\n").runtime()?;
            dir.finish("generate", &config).runtime()?;
            Err(GenClientError::Unreachable { failed, total, last_error, records: Vec::new(), log }.into())
        }
        Err(e) => Err(e.into()),
    }
}

async fn classify(
    records: Option<&Path>,
    respondents: Option<&Path>,
    url: Option<String>,
    out: &Path,
) -> Outcome<()> {
    let scheme = CodingScheme::builtin();
    let classifier = match &url {
        Some(url) => Classifier::Remote(RemoteClassifier::connect(RemoteConfig::new(url.clone()), &scheme).await?),
        None => Classifier::baseline(),
    };
    let mut rows = Vec::new();
    if let Some(path) = records {
        require_file(path)?;
        let recs = load_records(path)?;
        let ok: Vec<_> = recs.iter().filter(|r| r.is_ok()).collect();
        let items: Vec<(String, String)> = ok.iter().map(|r| (r.respondent_id.clone(), r.raw_output.clone())).collect();
        let coded = classifier.label(&items, Source::Llm).await?;
        for (rec, response) in ok.into_iter().zip(coded) {
            rows.push(LabelRow { wave_id: rec.wave_id, model: rec.model.clone(), variant: Some(rec.variant), response });
        }
    } else if let Some(path) = respondents {
        require_file(path)?;
        let people = load_respondents(path)?.respondents;
        let answered: Vec<_> = people.iter().filter(|r| r.answer_text.is_some()).collect();
        let items: Vec<(String, String)> =
            answered.iter().map(|r| (r.id.clone(), r.answer_text.clone().unwrap_or_default())).collect();
        let coded = classifier.label(&items, Source::Survey).await?;
        for (r, response) in answered.into_iter().zip(coded) {
            rows.push(LabelRow { wave_id: r.wave_id, model: String::new(), variant: None, response });
        }
    }
    let dir = RunDir::create(out).runtime()?;
    dir.write_jsonl("labels.jsonl", &rows).runtime()?;
    dir.finish("classify", &json!({ "classifier": classifier.name(), "url": url })).runtime()?;
    Ok(())
}

fn write_outputs(dir: &RunDir, out: &ExperimentOutput) -> Outcome<()> {
    dir.write_jsonl("records.jsonl", &out.records).runtime()?;
    dir.write_jsonl("labels.jsonl", &out.labels).runtime()?;
    dir.write("report.json", out.report.to_json()).runtime()?;
    emit_all(&out.report, TableFormat::Csv, "all", dir)
}

async fn run(args: RunArgs, command: &str, kind: Option<ExperimentKind>) -> Outcome<()> {
    require_file(&args.spec)?;
    let mut spec = ExperimentSpec::load(&args.spec)?;
    if let Some(kind) = kind {
        spec.kind = kind;
    }
    let base = args.spec.parent().unwrap_or(Path::new("."));
    let (resolved, output) = run_from_spec(spec, base).await?;
    let dir = RunDir::create(&args.out).runtime()?;
    write_outputs(&dir, &output)?;
    dir.finish(command, &serde_json::to_value(&resolved).runtime()?).runtime()?;
    eprintln!("{} cells written to {}", output.report.len(), args.out.display());
    Ok(())
}

/// Tables in `format` and the requested figures; with `all`, figures whose
/// metrics are absent are skipped.
fn emit_all(report: &MetricReport, format: TableFormat, figure: &str, dir: &RunDir) -> Outcome<()> {
    for (name, body) in render_tables(report, format) {
        dir.write(&format!("tables/{name}"), body).runtime()?;
    }
    let kinds = if figure == "all" { FigureKind::ALL.to_vec() } else { vec![figure.parse::<FigureKind>()?] };
    for kind in kinds {
        match emit_plots(report, kind) {
            Ok(files) => {
                for (name, body) in files {
                    dir.write(&format!("figures/{name}"), body).runtime()?;
                }
            }
            Err(ReportError::MissingMetrics(family)) if figure == "all" => {
                tracing::debug!(figure = kind.as_str(), family, "skipped");
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn report(run: &Path, figure: &str, format: &str, out: Option<&Path>) -> Outcome<()> {
    let format: TableFormat = format.parse()?;
    if figure != "all" {
        figure.parse::<FigureKind>()?;
    }
    let path = run.join("report.json");
    require_file(&path)?;
    let text = std::fs::read_to_string(&path).runtime()?;
    let report = MetricReport::from_json(&text).validation()?;
    let dir = RunDir::create(out.unwrap_or(run)).runtime()?;
    emit_all(&report, format, figure, &dir)
}
