use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Respondent, Variable};
use crate::labeling::LabeledResponse;

/// Partition of respondents by their value of `variable`. Respondents
/// lacking the field are left out.
pub fn subgroup_slices<'a>(
    respondents: &'a [Respondent],
    variable: Variable,
) -> BTreeMap<&'static str, Vec<&'a Respondent>> {
    let mut out: BTreeMap<&'static str, Vec<&Respondent>> = BTreeMap::new();
    for r in respondents {
        if let Some(v) = r.value_of(variable) {
            out.entry(v).or_default().push(r);
        }
    }
    out
}

/// Pairs each respondent's primary label with the primary label of another
/// respondent drawn uniformly from the same stratum (the joint values of
/// `strata`). A respondent alone in its stratum is paired with itself.
/// Pairs come back in input order.
pub fn resample_survey_baseline(
    items: &[(&Respondent, &LabeledResponse)],
    strata: &[Variable],
    seed: u64,
) -> Vec<(String, String)> {
    let mut groups: BTreeMap<Vec<Option<&'static str>>, Vec<usize>> = BTreeMap::new();
    for (i, (r, _)) in items.iter().enumerate() {
        let key = strata.iter().map(|&v| r.value_of(v)).collect();
        groups.entry(key).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut partner = vec![0usize; items.len()];
    for members in groups.values() {
        for (pos, &i) in members.iter().enumerate() {
            partner[i] = if members.len() == 1 {
                i
            } else {
                let k = rng.gen_range(0..members.len() - 1);
                members[if k >= pos { k + 1 } else { k }]
            };
        }
    }
    items
        .iter()
        .zip(partner)
        .map(|((_, l), j)| (l.primary().to_string(), items[j].1.primary().to_string()))
        .collect()
}
