use fidelity_core::corpus::{synthesize_population, AnswerBank, CodingScheme, PopulationSpec, WaveTable};
use fidelity_core::experiments::{run_experiment, Corpus, ExperimentKind, ExperimentSpec};
use fidelity_core::genclient::MockBackend;
use fidelity_core::labeling::Classifier;
use fidelity_core::metrics::{CellKey, MetricReport};
use fidelity_core::report::{emit_plots, render_tables, write_plots, FigureKind, ReportError, TableFormat};

async fn report(kind: ExperimentKind, waves: &[u32], n: usize) -> MetricReport {
    let mut pop = PopulationSpec::builtin();
    pop.waves = waves.to_vec();
    let respondents =
        synthesize_population(&pop, n, &CodingScheme::builtin(), &AnswerBank::builtin()).unwrap().respondents;
    let corpus = Corpus { respondents, waves: WaveTable::builtin(), scheme: CodingScheme::builtin() };
    let mut spec = ExperimentSpec::new(kind);
    spec.seed = 5;
    spec.waves = waves.to_vec();
    let spec = spec.resolve(&WaveTable::builtin()).unwrap();
    run_experiment(&spec, &corpus, &MockBackend::new(5), &Classifier::baseline()).await.unwrap().report
}

fn file<'a>(files: &'a [(String, String)], name: &str) -> &'a str {
    &files.iter().find(|(n, _)| n == name).unwrap_or_else(|| panic!("no {name}")).1
}

#[tokio::test]
async fn emission_is_byte_identical() {
    let r = report(ExperimentKind::WaveSweep, &[12, 13], 150).await;
    for format in [TableFormat::Csv, TableFormat::Json, TableFormat::Markdown] {
        assert_eq!(render_tables(&r, format), render_tables(&r, format));
    }
    let again = MetricReport::from_json(&r.to_json()).unwrap();
    assert_eq!(render_tables(&r, TableFormat::Csv), render_tables(&again, TableFormat::Csv));
    for kind in [FigureKind::LabelFrequency, FigureKind::JsSubgroups, FigureKind::EntropyJs, FigureKind::Cramer] {
        assert_eq!(emit_plots(&r, kind).unwrap(), emit_plots(&again, kind).unwrap());
    }
}

#[test]
fn empty_report_gives_header_only_tables() {
    let r = MetricReport::new("empty");
    for (name, body) in render_tables(&r, TableFormat::Csv) {
        assert_eq!(body.lines().count(), 1, "{name}: {body}");
    }
    for kind in FigureKind::ALL {
        assert!(matches!(emit_plots(&r, kind), Err(ReportError::MissingMetrics(_))));
    }
}

#[test]
fn nulls_render_as_nan_and_percentages_use_one_decimal() {
    let mut r = MetricReport::new("t");
    let k = CellKey::new(Some(12), "m", "all_vars", "");
    r.set(k.clone(), "entropy_survey", Some(2.93412));
    r.set(k.clone(), "js_distance", None);
    r.set(k.clone(), "pct_survey:Economic Policy", Some(12.3456));
    r.set(k, "n", Some(1000.0));
    let files = render_tables(&r, TableFormat::Csv);
    let cells = file(&files, "cells.csv");
    let row = cells.lines().nth(1).unwrap();
    assert!(row.contains("2.934"), "{cells}");
    assert!(row.contains("nan"), "{cells}");
    assert!(row.contains(",1000"), "{cells}");
    assert!(file(&files, "labels.csv").contains("12.3"), "{files:?}");
    assert!(!file(&files, "labels.csv").contains("12.35"));
    let json = render_tables(&r, TableFormat::Json);
    assert!(file(&json, "cells.json").contains("null"));
}

#[test]
fn missing_cramer_family_is_named() {
    let mut r = MetricReport::new("t");
    r.set(CellKey::new(Some(12), "m", "all_vars", ""), "js_distance", Some(0.3));
    let err = emit_plots(&r, FigureKind::Cramer).unwrap_err();
    assert!(err.to_string().contains("Cramér"), "{err}");
    assert!("violin".parse::<FigureKind>().is_err());
    assert!("yaml".parse::<TableFormat>().is_err());
}

#[tokio::test]
async fn one_js_subgroup_figure_per_variable() {
    let r = report(ExperimentKind::OneWaveMultiModel, &[12], 300).await;
    let dir = tempfile::tempdir().unwrap();
    let paths = write_plots(&r, FigureKind::JsSubgroups, dir.path()).unwrap();
    assert_eq!(paths.len(), 6);
    for p in &paths {
        let body = std::fs::read_to_string(p).unwrap();
        assert!(body.starts_with("<svg") && body.trim_end().ends_with("</svg>"));
        assert!(body.contains("<rect"));
    }
    assert_eq!(emit_plots(&r, FigureKind::InfoGain).unwrap().len(), 6);
    assert_eq!(emit_plots(&r, FigureKind::Cramer).unwrap().len(), 2);
}

#[tokio::test]
async fn ablation_figure_orders_variants() {
    let r = report(ExperimentKind::Ablation, &[12], 120).await;
    let files = emit_plots(&r, FigureKind::Ablation).unwrap();
    let svg = &files[0].1;
    let all = svg.find(">all_vars<").unwrap();
    let base = svg.find(">base<").unwrap();
    let without = svg.find(">without_gender<").unwrap();
    assert!(all < base && base < without);
}
