use std::path::PathBuf;

use fidelity_core::corpus::{
    Age, AgeGroup, EducationDegree, Gender, Party, Region, Respondent, Variable,
    VocationalDegree, WaveTable,
};
use fidelity_core::persona::{enumerate_ablations, PromptRenderer, PromptVariant};
use proptest::prelude::*;
use regex::Regex;

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/prompts")
}

fn golden_respondent() -> Respondent {
    Respondent {
        id: "golden".into(),
        wave_id: 12,
        age: Age::exact(61),
        gender: Some(Gender::Female),
        leaning_party: Some(Party::NoParty),
        region: Some(Region::West),
        education_degree: Some(EducationDegree::ALL[0]),
        vocational_degree: Some(VocationalDegree::ALL[6]),
        answer_text: None,
    }
}

/// Set `UPDATE_GOLDEN=1` to rewrite the fixtures after an intended change.
#[test]
fn every_variant_matches_its_golden_file() {
    let waves = WaveTable::builtin();
    let r = golden_respondent();
    let renderer = PromptRenderer::default();
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for variant in enumerate_ablations() {
        let text = renderer.render(&r, waves.get(12).unwrap(), variant).unwrap().text;
        let path = golden_dir().join(format!("{variant}.txt"));
        if update {
            std::fs::write(&path, &text).unwrap();
        }
        let expected = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(text, expected, "variant {variant}");
    }
}

#[test]
fn male_persona_uses_masculine_forms() {
    let waves = WaveTable::builtin();
    let mut r = golden_respondent();
    r.gender = Some(Gender::Male);
    let p = PromptRenderer::default()
        .render(&r, waves.get(12).unwrap(), PromptVariant::AllVars)
        .unwrap();
    assert!(p.text.contains("Der Befragte ist 61 Jahre alt und männlich. Er "));
    assert!(p.text.contains(". Er lebt in"));
}

fn arb_respondent() -> impl Strategy<Value = Respondent> {
    (
        18u32..=85,
        prop::sample::select(Gender::ALL.to_vec()),
        prop::sample::select(Party::ALL.to_vec()),
        prop::sample::select(Region::ALL.to_vec()),
        prop::sample::select(EducationDegree::ALL.to_vec()),
        prop::sample::select(VocationalDegree::ALL.to_vec()),
        prop::sample::select(vec![10u32, 12, 15, 21]),
        any::<bool>(),
    )
        .prop_map(|(years, g, p, reg, e, v, wave, exact)| Respondent {
            id: "p".into(),
            wave_id: wave,
            age: if exact {
                Age::exact(years)
            } else {
                Some(Age::bracket(AgeGroup::of_years(years).unwrap()))
            },
            gender: Some(g),
            leaning_party: Some(p),
            region: Some(reg),
            education_degree: Some(e),
            vocational_degree: Some(v),
            answer_text: None,
        })
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace()
        .map(|w| w.trim_matches(|c: char| c == '.' || c == ',').to_string())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Words of `full` that are not matched by a greedy in-order walk of `part`;
/// `None` if `part` is not a subsequence of `full`.
fn removed_words(full: &[String], part: &[String]) -> Option<Vec<String>> {
    let mut removed = Vec::new();
    let mut it = part.iter().peekable();
    for w in full {
        if it.peek() == Some(&w) {
            it.next();
        } else {
            removed.push(w.clone());
        }
    }
    it.next().is_none().then_some(removed)
}

proptest! {
    #[test]
    fn scraper_recovers_persona(r in arb_respondent()) {
        let waves = WaveTable::builtin();
        let renderer = PromptRenderer::default();
        let p = renderer.render(&r, waves.get(r.wave_id).unwrap(), PromptVariant::AllVars).unwrap();
        let re = Regex::new(
            r"(Der|Die) Befragte ist (\d+) Jahre alt und (männlich|weiblich)\. .* lebt in (\S+) und unterstützt hauptsächlich (.+)\.$",
        ).unwrap();
        let caps = re.captures(&p.text).expect("persona sentence present");
        let years: u32 = caps[2].parse().unwrap();
        prop_assert_eq!(AgeGroup::of_years(years), Some(r.age.unwrap().group));
        let gender = if &caps[3] == "weiblich" { Gender::Female } else { Gender::Male };
        prop_assert_eq!(Some(gender), r.gender);
        prop_assert_eq!(&caps[1], if gender == Gender::Female { "Die" } else { "Der" });
        let region = Region::ALL.iter().find(|&&x| renderer.clauses().region(x) == &caps[4]).copied();
        prop_assert_eq!(region, r.region);
        let party = Party::ALL.iter().find(|&&x| renderer.clauses().party(x) == &caps[5]).copied();
        prop_assert_eq!(party, r.leaning_party);
        let wave = waves.get(r.wave_id).unwrap();
        let date = format!("im {} {} konfrontiert", wave.month(), wave.year());
        prop_assert!(p.text.contains(&date));
    }

    #[test]
    fn leave_one_out_removes_only_that_clause(r in arb_respondent()) {
        let waves = WaveTable::builtin();
        let wave = waves.get(r.wave_id).unwrap();
        let renderer = PromptRenderer::default();
        let c = renderer.clauses();
        let full = words(&renderer.render(&r, wave, PromptVariant::AllVars).unwrap().text);
        for &v in Variable::ALL {
            let without = renderer.render(&r, wave, PromptVariant::WithoutVar(v)).unwrap().text;
            let without = words(&without);
            if v == Variable::Gender {
                prop_assert!(!without.iter().any(|w| w == "männlich" || w == "weiblich"));
                prop_assert!(without.iter().any(|w| w == "Er/Sie"));
                continue;
            }
            let mut removed = removed_words(&full, &without).expect("subsequence");
            let mut expected: Vec<String> = match v {
                Variable::Age => format!("{} Jahre alt und", r.age.unwrap().prompt_years()),
                Variable::EducationDegree => format!("{} und", c.education(r.education_degree.unwrap())),
                Variable::VocationalDegree => format!("und {}", c.vocational(r.vocational_degree.unwrap())),
                Variable::Region => format!("lebt in {} und", c.region(r.region.unwrap())),
                Variable::LeaningParty => format!("und unterstützt hauptsächlich {}", c.party(r.leaning_party.unwrap())),
                Variable::Gender => unreachable!(),
            }
            .split_whitespace()
            .map(String::from)
            .collect();
            removed.sort();
            expected.sort();
            prop_assert_eq!(removed, expected, "variant without_{}", v.variant_token());
        }
    }

    #[test]
    fn rendering_is_pure(r in arb_respondent(), idx in 0usize..14) {
        let waves = WaveTable::builtin();
        let variant = enumerate_ablations()[idx];
        let renderer = PromptRenderer::default();
        let a = renderer.render(&r, waves.get(r.wave_id).unwrap(), variant).unwrap();
        let b = renderer.render(&r, waves.get(r.wave_id).unwrap(), variant).unwrap();
        prop_assert_eq!(a, b);
    }
}
