//! Acceptance suite. Each test checks one exit criterion at its fixed
//! tolerance and writes a `PASS`/`FAIL` line to stderr (uncaptured).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use fidelity_core::corpus::{
    Age, AnswerOverride, CodingScheme, EducationDegree, Gender, Party, PopulationSpec, Region, Respondent,
    Variable, VocationalDegree, WaveTable,
};
use fidelity_core::labeling::{LabeledResponse, Source};
use fidelity_core::metrics::{
    ape, chi_square, cohens_kappa, conditional_entropy, cramers_v, entropy, estimate_distribution, information_gain,
    js_distance, js_distance_in, mean_defined, pearson_r, JointTable, LabelDistribution, LogBase, MetricReport,
    CellKey,
};
use fidelity_core::persona::{enumerate_ablations, PromptRenderer, PromptVariant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WAVES: [u32; 10] = [12, 13, 14, 15, 16, 17, 18, 19, 20, 21];
/// Published per-wave population summary.
const PRINTED_SURVEY_ENTROPY: [f64; 10] = [2.93, 2.02, 2.24, 2.31, 2.53, 2.82, 2.75, 2.85, 2.92, 2.19];
const PRINTED_JS: [f64; 10] = [0.29, 0.29, 0.24, 0.22, 0.20, 0.23, 0.23, 0.22, 0.24, 0.30];

fn verdict(criterion: &str, pass: bool, detail: &str) {
    let line = format!("{} {criterion}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "{criterion}: {detail}");
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Per-label survey and model percentages for waves 12 to 21.
struct WaveColumns {
    survey: BTreeMap<String, Vec<f64>>,
    llm: BTreeMap<String, Vec<f64>>,
    printed_mean_ape: BTreeMap<String, String>,
}

fn wave_columns() -> WaveColumns {
    let mut rdr = csv::Reader::from_path(fixture("wave_label_percentages.csv")).unwrap();
    let mut out = WaveColumns { survey: BTreeMap::new(), llm: BTreeMap::new(), printed_mean_ape: BTreeMap::new() };
    for row in rdr.records() {
        let row = row.unwrap();
        let values: Vec<f64> = (2..12).map(|i| row[i].parse().unwrap()).collect();
        match &row[1] {
            "survey" => out.survey.insert(row[0].to_string(), values),
            _ => {
                out.printed_mean_ape.insert(row[0].to_string(), row[12].to_string());
                out.llm.insert(row[0].to_string(), values)
            }
        };
    }
    out
}

/// Label -> (survey, [gemma, llama2, mixtral]) percentages of the one-wave model comparison.
fn model_columns() -> BTreeMap<String, (f64, [f64; 3])> {
    let mut rdr = csv::Reader::from_path(fixture("model_label_percentages.csv")).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            let f = |i: usize| r[i].parse::<f64>().unwrap();
            (r[0].to_string(), (f(1), [f(2), f(3), f(4)]))
        })
        .collect()
}

/// Turns percentages (0.1 resolution) into that many coded answers and
/// estimates the substantive-only distribution the way the pipeline does.
fn distribution_from_percentages(column: &[(String, f64)], source: Source) -> LabelDistribution {
    let scheme = CodingScheme::builtin();
    let mut responses = Vec::new();
    for (label, pct) in column {
        let count = (pct * 10.0).round() as usize;
        for i in 0..count {
            responses.push(LabeledResponse::new(format!("{label}-{i}"), source, vec![label.clone()]));
        }
    }
    estimate_distribution(&responses, &scheme, true).unwrap()
}

fn wave_distributions(cols: &WaveColumns, idx: usize) -> (LabelDistribution, LabelDistribution) {
    let pick = |m: &BTreeMap<String, Vec<f64>>| m.iter().map(|(l, v)| (l.clone(), v[idx])).collect::<Vec<_>>();
    (
        distribution_from_percentages(&pick(&cols.survey), Source::Survey),
        distribution_from_percentages(&pick(&cols.llm), Source::Llm),
    )
}

#[test]
fn entropy_reproduction() {
    let start = Instant::now();
    let (survey, llm) = wave_distributions(&wave_columns(), 0);
    let (hs, hl) = (entropy(&survey), entropy(&llm));
    let elapsed = start.elapsed();
    verdict(
        "entropy reproduction (wave 12, survey 2.93 / LLM 2.90 +-0.02, < 1 s)",
        within(hs, 2.93, 0.02) && within(hl, 2.90, 0.02) && elapsed < Duration::from_secs(1),
        &format!("survey {hs:.3}, LLM {hl:.3}, {} ms", elapsed.as_millis()),
    );
}

#[test]
fn js_distance_reproduction() {
    let cols = wave_columns();
    let mut detail = Vec::new();
    let mut pass = true;
    for (i, w) in WAVES.iter().enumerate() {
        let (survey, llm) = wave_distributions(&cols, i);
        let js = js_distance_in(&survey, &llm, LogBase::Natural);
        let tol = if i == 0 { 0.02 } else { 0.03 };
        pass &= within(js, PRINTED_JS[i], tol);
        detail.push(format!("w{w} {js:.3} (log2 {:.3}, printed {:.2})", js_distance(&survey, &llm), PRINTED_JS[i]));
    }
    verdict(
        "JS distance reproduction (wave 12 0.29 +-0.02, waves 12-21 +-0.03 each)",
        pass,
        &detail.join("; "),
    );
}

#[test]
fn model_comparison_reproduction() {
    let cols = model_columns();
    let survey: Vec<(String, f64)> = cols.iter().map(|(l, (s, _))| (l.clone(), *s)).collect();
    let survey = distribution_from_percentages(&survey, Source::Survey);
    let names = ["Gemma", "Llama2", "Mixtral"];
    let js_targets = [0.62, 0.28, 0.29];
    let mut pass = true;
    let mut detail = vec![format!("survey H {:.3}", entropy(&survey))];
    for m in 0..3 {
        let col: Vec<(String, f64)> = cols.iter().map(|(l, (_, v))| (l.clone(), v[m])).collect();
        let dist = distribution_from_percentages(&col, Source::Llm);
        let h = entropy(&dist);
        let js = js_distance_in(&survey, &dist, LogBase::Natural);
        pass &= within(js, js_targets[m], 0.03);
        let entropy_target = match m {
            0 => Some(2.26),
            2 => Some(2.56),
            _ => None,
        };
        if let Some(t) = entropy_target {
            let ok = within(h, t, 0.06);
            pass &= ok;
            detail.push(format!("{} H {h:.3} (target {t} {})", names[m], if ok { "ok" } else { "MISS" }));
        } else {
            detail.push(format!("{} H {h:.3}", names[m]));
        }
        let ok = within(js, js_targets[m], 0.03);
        detail.push(format!("{} JS {js:.3} (target {} {})", names[m], js_targets[m], if ok { "ok" } else { "MISS" }));
    }
    verdict(
        "model comparison reproduction (entropy Gemma 2.26 / Mixtral 2.56 +-0.06, JS 0.62/0.28/0.29 +-0.03)",
        pass,
        &detail.join("; "),
    );
}

#[test]
fn ape_reproduction() {
    let cols = model_columns();
    let (survey, models) = cols["Economic Policy"];
    let apes: Vec<Option<f64>> = models.iter().map(|&m| ape(survey, m)).collect();
    let mean = mean_defined(&apes).unwrap();
    let expected = [45.6, 124.4, 64.4];
    let per_model_ok = apes.iter().zip(expected).all(|(a, e)| within(a.unwrap(), e, 0.05));

    let waves = wave_columns();
    let refusal: Vec<Option<f64>> = waves.survey["LLM Refusal"]
        .iter()
        .zip(&waves.llm["LLM Refusal"])
        .map(|(&s, &l)| ape(s, l))
        .collect();
    let refusal_mean = mean_defined(&refusal);
    verdict(
        "APE reproduction (Economic Policy 45.6/124.4/64.4, mean 78.0 +-0.5; LLM Refusal mean undefined)",
        per_model_ok && within(mean, 78.0, 0.5) && refusal_mean.is_none(),
        &format!(
            "APEs {:.1}/{:.1}/{:.1}, mean {mean:.2} (printed 78.02); LLM Refusal mean {:?} (printed {})",
            apes[0].unwrap(),
            apes[1].unwrap(),
            apes[2].unwrap(),
            refusal_mean,
            waves.printed_mean_ape["LLM Refusal"]
        ),
    );
}

#[test]
fn correlation_reproduction() {
    let r = pearson_r(&PRINTED_SURVEY_ENTROPY, &PRINTED_JS).unwrap();
    // the same correlation recomputed from the per-label columns
    let cols = wave_columns();
    let (hs, js): (Vec<f64>, Vec<f64>) = (0..10)
        .map(|i| {
            let (s, l) = wave_distributions(&cols, i);
            (entropy(&s), js_distance_in(&s, &l, LogBase::Natural))
        })
        .unzip();
    let r_columns = pearson_r(&hs, &js).unwrap();
    verdict(
        "entropy/JS correlation in [-0.40, -0.28]",
        (-0.40..=-0.28).contains(&r),
        &format!("r = {r:.3} over published pairs, {r_columns:.3} recomputed from label columns"),
    );
}

// Independent oracles for the property suite: direct sums over cells.

fn oracle_entropy(p: &[f64]) -> f64 {
    let total: f64 = p.iter().sum();
    p.iter().filter(|&&x| x > 0.0).map(|&x| -(x / total) * (x / total).log2()).sum()
}

fn oracle_mutual_information(t: &[Vec<u64>]) -> f64 {
    let n: f64 = t.iter().flatten().sum::<u64>() as f64;
    let rows: Vec<f64> = t.iter().map(|r| r.iter().sum::<u64>() as f64 / n).collect();
    let cols: Vec<f64> = (0..t[0].len()).map(|j| t.iter().map(|r| r[j]).sum::<u64>() as f64 / n).collect();
    let mut mi = 0.0;
    for (i, row) in t.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let pxy = c as f64 / n;
                mi += pxy * (pxy / (rows[i] * cols[j])).log2();
            }
        }
    }
    mi
}

fn oracle_conditional_entropy(t: &[Vec<u64>]) -> f64 {
    let n: f64 = t.iter().flatten().sum::<u64>() as f64;
    let mut h = 0.0;
    for row in t {
        let rt = row.iter().sum::<u64>() as f64;
        for &c in row {
            if c > 0 {
                h -= (c as f64 / n) * (c as f64 / rt).log2();
            }
        }
    }
    h
}

fn oracle_chi_square(t: &[Vec<u64>]) -> f64 {
    let n: f64 = t.iter().flatten().sum::<u64>() as f64;
    let mut chi = 0.0;
    for row in t {
        let ri = row.iter().sum::<u64>() as f64;
        for (j, &c) in row.iter().enumerate() {
            let cj = t.iter().map(|r| r[j]).sum::<u64>() as f64;
            let e = ri * cj / n;
            if e > 0.0 {
                chi += (c as f64 - e).powi(2) / e;
            }
        }
    }
    chi
}

fn random_table(rng: &mut ChaCha8Rng) -> Vec<Vec<u64>> {
    let (r, c) = (rng.gen_range(2..=5), rng.gen_range(2..=5));
    loop {
        let t: Vec<Vec<u64>> = (0..r).map(|_| (0..c).map(|_| rng.gen_range(0..=12)).collect()).collect();
        if t.iter().flatten().any(|&x| x > 0) {
            return t;
        }
    }
}

fn random_distribution(rng: &mut ChaCha8Rng, k: usize) -> LabelDistribution {
    loop {
        let counts: Vec<u64> = (0..k).map(|_| rng.gen_range(0..=20)).collect();
        if counts.iter().any(|&c| c > 0) {
            return LabelDistribution::from_counts(counts.into_iter().enumerate().map(|(i, c)| (format!("l{i}"), c)))
                .unwrap();
        }
    }
}

#[test]
fn metric_property_suite() {
    const INSTANCES: usize = 1500;
    const EPS: f64 = 1e-9;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xf1de);
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok && failures.len() < 10 {
            failures.push(what);
        }
    };
    for i in 0..INSTANCES {
        let k = rng.gen_range(2..=8);
        let (p, q) = (random_distribution(&mut rng, k), random_distribution(&mut rng, k));
        let (pq, qp) = (js_distance(&p, &q), js_distance(&q, &p));
        check((pq - qp).abs() < EPS, format!("#{i} JS asymmetric {pq} {qp}"));
        check((-EPS..=1.0 + EPS).contains(&pq), format!("#{i} JS out of [0,1]: {pq}"));
        check(js_distance(&p, &p).abs() < 1e-6, format!("#{i} JS(p,p) != 0"));
        let h = entropy(&p);
        check(h >= 0.0 && h <= (k as f64).log2() + EPS, format!("#{i} entropy {h} outside [0, log2 {k}]"));
        check((h - oracle_entropy(p.probs())).abs() < EPS, format!("#{i} entropy vs oracle"));

        let t = random_table(&mut rng);
        let table = JointTable::from_matrix(t.clone()).unwrap();
        let hy = entropy(&table.y_distribution());
        let hyx = conditional_entropy(&table);
        let mi = information_gain(&table);
        let mi_oracle = oracle_mutual_information(&t);
        check((hy - (hyx + mi_oracle)).abs() < EPS, format!("#{i} chain rule {hy} != {hyx} + {mi_oracle}"));
        check((mi - mi_oracle).abs() < EPS, format!("#{i} MI {mi} vs oracle {mi_oracle}"));
        check((hyx - oracle_conditional_entropy(&t)).abs() < EPS, format!("#{i} H(Y|X) vs oracle"));
        check(mi >= -EPS, format!("#{i} MI negative {mi}"));
        check((chi_square(&table) - oracle_chi_square(&t)).abs() < 1e-6, format!("#{i} chi-square vs oracle"));
        if let Ok(v) = cramers_v(&table) {
            check((0.0..=1.0).contains(&v), format!("#{i} V out of range {v}"));
        }

        // perfect association: a permutation-diagonal table
        let n = rng.gen_range(2..=6);
        let mut perm: Vec<usize> = (0..n).collect();
        for a in (1..n).rev() {
            perm.swap(a, rng.gen_range(0..=a));
        }
        let perfect: Vec<Vec<u64>> =
            (0..n).map(|r| (0..n).map(|c| if perm[r] == c { rng.gen_range(1..=9) } else { 0 }).collect()).collect();
        let v = cramers_v(&JointTable::from_matrix(perfect).unwrap()).unwrap();
        check((v - 1.0).abs() < EPS, format!("#{i} V on perfect table {v}"));
        // independence: integer outer product
        let (a, b): (Vec<u64>, Vec<u64>) = (
            (0..rng.gen_range(2..=4)).map(|_| rng.gen_range(1..=5)).collect(),
            (0..rng.gen_range(2..=4)).map(|_| rng.gen_range(1..=5)).collect(),
        );
        let indep: Vec<Vec<u64>> = a.iter().map(|x| b.iter().map(|y| x * y).collect()).collect();
        let v = cramers_v(&JointTable::from_matrix(indep).unwrap()).unwrap();
        check(v.abs() < 1e-6, format!("#{i} V on independent table {v}"));

        let labels = ["a", "b", "c", "d"];
        let seq: Vec<(&str, &str)> = (0..rng.gen_range(2..=30))
            .map(|j| {
                let l = if j < 2 { labels[j] } else { labels[rng.gen_range(0..4)] };
                (l, l)
            })
            .collect();
        let kappa = cohens_kappa(&seq).unwrap();
        check(kappa.is_some_and(|k| (k - 1.0).abs() < EPS), format!("#{i} kappa on identical sequences {kappa:?}"));
    }
    let elapsed = start.elapsed();
    verdict(
        "metric property suite (>= 1000 instances, < 5 s)",
        failures.is_empty() && elapsed < Duration::from_secs(5),
        &format!("{INSTANCES} instances in {} ms; {}", elapsed.as_millis(), if failures.is_empty() {
            "all properties hold".to_string()
        } else {
            failures.join("; ")
        }),
    );
}

fn persona(gender: Gender) -> Respondent {
    Respondent {
        id: "golden".into(),
        wave_id: 12,
        age: Age::exact(61),
        gender: Some(gender),
        leaning_party: Some(Party::NoParty),
        region: Some(Region::West),
        education_degree: Some(EducationDegree::ALL[0]),
        vocational_degree: Some(VocationalDegree::ALL[6]),
        answer_text: None,
    }
}

#[test]
fn prompt_goldens() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/prompts");
    let waves = WaveTable::builtin();
    let renderer = PromptRenderer::default();
    let variants = enumerate_ablations();
    let mut problems = Vec::new();
    for &variant in &variants {
        let text = renderer.render(&persona(Gender::Female), waves.get(12).unwrap(), variant).unwrap().text;
        let expected = std::fs::read_to_string(golden.join(format!("{variant}.txt"))).unwrap_or_default();
        if text != expected {
            problems.push(format!("{variant} differs from golden"));
        }
    }
    let shape = regex::Regex::new(
        r"\n\n(Der|Die) Befragte ist 61 Jahre alt und (männlich|weiblich)\. (Er|Sie) [^.]+ und [^.]+\. (Er|Sie) lebt in Westdeutschland und unterstützt hauptsächlich keine Partei\.$",
    )
    .unwrap();
    for (gender, article, adjective, pronoun) in
        [(Gender::Female, "Die", "weiblich", "Sie"), (Gender::Male, "Der", "männlich", "Er")]
    {
        let text = renderer.render(&persona(gender), waves.get(12).unwrap(), PromptVariant::AllVars).unwrap().text;
        match shape.captures(&text) {
            Some(c) if &c[1] == article && &c[2] == adjective && &c[3] == pronoun && &c[4] == pronoun => {}
            _ => problems.push(format!("{gender:?} persona agreement: {text:?}")),
        }
        if !text.contains("im November 2019 konfrontiert") {
            problems.push("wave 12 time frame missing".into());
        }
    }
    verdict(
        "prompt goldens (14 variants, gender agreement)",
        problems.is_empty() && variants.len() == 14,
        &if problems.is_empty() { format!("{} variants match", variants.len()) } else { problems.join("; ") },
    );
}

fn fidelity(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fidelity")).args(args).output().unwrap()
}

fn evaluate(dir: &Path, name: &str, population: &PopulationSpec) -> MetricReport {
    let pop_path = dir.join(format!("{name}.population.toml"));
    std::fs::write(&pop_path, toml::to_string(population).unwrap()).unwrap();
    let spec = dir.join(format!("{name}.toml"));
    std::fs::write(
        &spec,
        format!(
            "kind = \"one_wave_multi_model\"\nseed = 11\nwaves = [12]\n[population]\nsize = 1000\nspec = \"{name}.population.toml\"\n"
        ),
    )
    .unwrap();
    let out = dir.join(format!("runs/{name}"));
    let o = fidelity(&["evaluate", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    MetricReport::from_json(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn end_to_end_determinism_and_bias_recovery() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let mut independent = PopulationSpec::builtin();
    independent.waves = vec![12];
    independent.answers.overrides.clear();
    let mut biased = independent.clone();
    biased.answers.overrides.push(AnswerOverride {
        variable: Some(Variable::LeaningParty),
        value: Some("Grünen".into()),
        wave: None,
        distribution: BTreeMap::from([
            ("Environmental Policy".to_string(), 0.9),
            ("Social Policy".to_string(), 0.05),
            ("Migration and Integration".to_string(), 0.05),
        ]),
    });

    let first = evaluate(tmp.path(), "biased", &biased);
    let a = std::fs::read(tmp.path().join("runs/biased/report.json")).unwrap();
    evaluate(tmp.path(), "biased_again", &biased);
    let b = std::fs::read(tmp.path().join("runs/biased_again/report.json")).unwrap();
    let identical = a == b;
    let baseline = evaluate(tmp.path(), "independent", &independent);

    let key = CellKey::new(Some(12), "mock", "all_vars", "");
    let greens = CellKey::new(Some(12), "mock", "all_vars", "leaning_party=Grünen");
    let mi = |r: &MetricReport| r.get(&key, "mutual_information_survey:leaning_party").flatten().unwrap_or(f64::NAN);
    let ig = |r: &MetricReport| r.get(&greens, "info_gain_survey").flatten().unwrap_or(f64::NAN);
    let n = first.get(&key, "n").flatten().unwrap_or(0.0);
    let elapsed = start.elapsed();
    verdict(
        "end-to-end determinism and bias recovery (1000 personas, < 60 s)",
        identical && n == 1000.0 && mi(&first) > mi(&baseline) && ig(&first) > ig(&baseline)
            && elapsed < Duration::from_secs(60),
        &format!(
            "reports identical: {identical}; n {n}; party MI {:.4} vs {:.4}; Greens info gain {:.4} vs {:.4}; {} ms",
            mi(&first),
            mi(&baseline),
            ig(&first),
            ig(&baseline),
            elapsed.as_millis()
        ),
    );
}
