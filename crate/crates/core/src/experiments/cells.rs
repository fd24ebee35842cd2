//! Metric families computed for one comparison cell.

use std::collections::HashMap;

use crate::corpus::{CodingScheme, Respondent, Variable};
use crate::labeling::LabeledResponse;
use crate::metrics::{
    ape, avg_labels_per_sample, cohens_kappa, cramers_v, entropy, estimate_distribution,
    information_gain, js_distance, js_distance_in, proportion_agreement, CellKey, JointTable,
    LabelDistribution, LogBase, MetricReport,
};

/// Coded answers of one wave, keyed by respondent id.
pub struct CellInput<'a> {
    pub respondents: &'a [Respondent],
    pub survey: &'a HashMap<String, LabeledResponse>,
    pub llm: &'a HashMap<String, LabeledResponse>,
}

impl CellInput<'_> {
    fn collect<'b>(
        &'b self,
        source: &'b HashMap<String, LabeledResponse>,
        members: impl IntoIterator<Item = &'b Respondent>,
    ) -> Vec<LabeledResponse> {
        members.into_iter().filter_map(|r| source.get(&r.id).cloned()).collect()
    }
}

fn substantive_dist(responses: &[LabeledResponse], scheme: &CodingScheme) -> Option<LabelDistribution> {
    estimate_distribution(responses, scheme, true).ok()
}

/// `(x, substantive label)` pairs, one per label occurrence.
fn occurrence_pairs<'a>(
    respondents: &'a [Respondent],
    answers: &'a HashMap<String, LabeledResponse>,
    var: Variable,
    scheme: &'a CodingScheme,
) -> Vec<(&'static str, &'a str)> {
    respondents
        .iter()
        .filter_map(|r| Some((r.value_of(var)?, answers.get(&r.id)?)))
        .flat_map(|(x, a)| {
            a.labels
                .iter()
                .filter(|l| scheme.is_substantive(l))
                .map(move |l| (x, l.as_str()))
        })
        .collect()
}

fn cramer(pairs: &[(&str, &str)]) -> Option<f64> {
    JointTable::from_pairs(pairs.iter().copied()).ok().and_then(|j| cramers_v(&j.compact()).ok())
}

fn mutual_information(pairs: &[(&str, &str)]) -> Option<f64> {
    JointTable::from_pairs(pairs.iter().copied()).ok().map(|j| information_gain(&j).max(0.0))
}

/// Population, subgroup and association metrics for one (wave, model,
/// variant) cell.
pub fn fill_comparison(
    report: &mut MetricReport,
    key: &CellKey,
    input: &CellInput<'_>,
    scheme: &CodingScheme,
    base: LogBase,
) {
    let survey = input.collect(input.survey, input.respondents);
    let llm = input.collect(input.llm, input.respondents);
    let ps = substantive_dist(&survey, scheme);
    let pl = substantive_dist(&llm, scheme);
    let mut set = |k: &CellKey, name: &str, v: Option<f64>| report.set(k.clone(), name, v);

    set(key, "n", Some(input.respondents.len() as f64));
    set(key, "entropy_survey", ps.as_ref().map(entropy));
    set(key, "entropy_llm", pl.as_ref().map(entropy));
    let js = ps.as_ref().zip(pl.as_ref());
    set(key, "js_distance", js.map(|(a, b)| js_distance_in(a, b, base)));
    set(key, "js_distance_log2", js.map(|(a, b)| js_distance(a, b)));
    set(key, "avg_labels_survey", avg_labels_per_sample(&survey));
    set(key, "avg_labels_llm", avg_labels_per_sample(&llm));

    // label shares over all occurrences, in percent, as in the comparison tables
    let all_s = estimate_distribution(&survey, scheme, false).ok();
    let all_l = estimate_distribution(&llm, scheme, false).ok();
    for label in scheme.all_labels() {
        let s = all_s.as_ref().map(|d| d.prob(label) * 100.0);
        let l = all_l.as_ref().map(|d| d.prob(label) * 100.0);
        set(key, &format!("pct_survey:{label}"), s);
        set(key, &format!("pct_llm:{label}"), l);
        set(key, &format!("ape:{label}"), s.zip(l).and_then(|(s, l)| ape(s, l)));
    }

    let pairs: Vec<(&str, &str)> = input
        .respondents
        .iter()
        .filter_map(|r| Some((input.llm.get(&r.id)?.primary(), input.survey.get(&r.id)?.primary())))
        .collect();
    set(key, "proportion_agreement", proportion_agreement(&pairs).ok());
    set(key, "cohens_kappa", cohens_kappa(&pairs).ok().flatten());

    for (i, &var) in Variable::ALL.iter().enumerate() {
        let s_pairs = occurrence_pairs(input.respondents, input.survey, var, scheme);
        let l_pairs = occurrence_pairs(input.respondents, input.llm, var, scheme);
        let name = var.as_str();
        set(key, &format!("cramers_v_survey:{name}"), cramer(&s_pairs));
        set(key, &format!("cramers_v_llm:{name}"), cramer(&l_pairs));
        set(key, &format!("mutual_information_survey:{name}"), mutual_information(&s_pairs));
        set(key, &format!("mutual_information_llm:{name}"), mutual_information(&l_pairs));
        for &other in &Variable::ALL[i + 1..] {
            let demo: Vec<(&str, &str)> = input
                .respondents
                .iter()
                .filter_map(|r| Some((r.value_of(var)?, r.value_of(other)?)))
                .collect();
            set(key, &format!("cramers_v:{name}~{}", other.as_str()), cramer(&demo));
        }

        let h_s = ps.as_ref().map(entropy);
        let h_l = pl.as_ref().map(entropy);
        let slices = super::subgroup_slices(input.respondents, var);
        for value in var.domain() {
            let sub = CellKey { subgroup: format!("{name}={value}"), ..key.clone() };
            let members = slices.get(value).map(Vec::as_slice).unwrap_or(&[]);
            let gs = substantive_dist(&input.collect(input.survey, members.iter().copied()), scheme);
            let gl = substantive_dist(&input.collect(input.llm, members.iter().copied()), scheme);
            set(&sub, "n", Some(members.len() as f64));
            set(&sub, "entropy_survey", gs.as_ref().map(entropy));
            set(&sub, "entropy_llm", gl.as_ref().map(entropy));
            let both = gs.as_ref().zip(gl.as_ref());
            set(&sub, "js_distance", both.map(|(a, b)| js_distance_in(a, b, base)));
            set(&sub, "info_gain_survey", h_s.zip(gs.as_ref()).map(|(h, g)| h - entropy(g)));
            set(&sub, "info_gain_llm", h_l.zip(gl.as_ref()).map(|(h, g)| h - entropy(g)));
        }
    }
}

/// Survey-only metrics (no LLM side), used by the drift and resample runs.
pub fn fill_survey_only(
    report: &mut MetricReport,
    key: &CellKey,
    respondents: &[Respondent],
    survey: &HashMap<String, LabeledResponse>,
    scheme: &CodingScheme,
) {
    let coded: Vec<LabeledResponse> =
        respondents.iter().filter_map(|r| survey.get(&r.id).cloned()).collect();
    let d = substantive_dist(&coded, scheme);
    report.set(key.clone(), "n", Some(respondents.len() as f64));
    report.set(key.clone(), "entropy_survey", d.as_ref().map(entropy));
    let all = estimate_distribution(&coded, scheme, false).ok();
    for label in scheme.all_labels() {
        report.set(key.clone(), &format!("pct_survey:{label}"), all.as_ref().map(|d| d.prob(label) * 100.0));
    }
}
