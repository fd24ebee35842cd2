use std::collections::HashMap;

use crate::corpus::CodingScheme;
use crate::labeling::LabeledResponse;

use super::MetricError;

const SUM_TOLERANCE: f64 = 1e-9;

/// Normalised categorical distribution over an explicit, ordered support.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistribution {
    support: Vec<String>,
    probs: Vec<f64>,
    counts: Option<Vec<u64>>,
}

impl LabelDistribution {
    /// Build from occurrence counts. Zero-count labels stay in the support.
    pub fn from_counts<S, I>(counts: I) -> Result<Self, MetricError>
    where
        S: Into<String>,
        I: IntoIterator<Item = (S, u64)>,
    {
        let (support, counts): (Vec<String>, Vec<u64>) =
            counts.into_iter().map(|(s, c)| (s.into(), c)).unzip();
        check_unique(&support)?;
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(MetricError::EmptySupport);
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(LabelDistribution {
            support,
            probs,
            counts: Some(counts),
        })
    }

    /// Build from probabilities that already sum to one.
    pub fn from_probs<S, I>(probs: I) -> Result<Self, MetricError>
    where
        S: Into<String>,
        I: IntoIterator<Item = (S, f64)>,
    {
        let (support, probs): (Vec<String>, Vec<f64>) =
            probs.into_iter().map(|(s, p)| (s.into(), p)).unzip();
        check_unique(&support)?;
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(MetricError::InvalidDistribution("negative or non-finite probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(MetricError::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(LabelDistribution {
            support,
            probs,
            counts: None,
        })
    }

    pub fn support(&self) -> &[String] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of label occurrences behind the distribution (0 when built
    /// from probabilities).
    pub fn total_count(&self) -> u64 {
        self.counts.as_ref().map_or(0, |c| c.iter().sum())
    }

    pub fn prob(&self, label: &str) -> f64 {
        self.support
            .iter()
            .position(|l| l == label)
            .map_or(0.0, |i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.support.iter().map(String::as_str).zip(self.probs.iter().copied())
    }

    /// Keep only labels satisfying `keep` and renormalise.
    pub fn restrict(&self, keep: impl Fn(&str) -> bool) -> Result<Self, MetricError> {
        match &self.counts {
            Some(counts) => Self::from_counts(
                self.support
                    .iter()
                    .zip(counts)
                    .filter(|(l, _)| keep(l))
                    .map(|(l, c)| (l.clone(), *c)),
            ),
            None => {
                let kept: Vec<(String, f64)> =
                    self.iter().filter(|(l, _)| keep(l)).map(|(l, p)| (l.to_string(), p)).collect();
                let mass: f64 = kept.iter().map(|(_, p)| p).sum();
                if mass <= 0.0 {
                    return Err(MetricError::EmptySupport);
                }
                Self::from_probs(kept.into_iter().map(|(l, p)| (l, p / mass)))
            }
        }
    }
}

fn check_unique(support: &[String]) -> Result<(), MetricError> {
    let mut seen = std::collections::HashSet::new();
    match support.iter().find(|l| !seen.insert(l.as_str())) {
        Some(dup) => Err(MetricError::InvalidDistribution(format!("duplicate label {dup:?}"))),
        None => Ok(()),
    }
}

/// Union of both supports (first distribution's order, then the second's
/// extras) with zero-filled probability vectors.
pub fn align(p: &LabelDistribution, q: &LabelDistribution) -> (Vec<String>, Vec<f64>, Vec<f64>) {
    let mut support: Vec<String> = p.support.clone();
    for l in &q.support {
        if !support.contains(l) {
            support.push(l.clone());
        }
    }
    let pv = support.iter().map(|l| p.prob(l)).collect();
    let qv = support.iter().map(|l| q.prob(l)).collect();
    (support, pv, qv)
}

/// Count label occurrences across responses; every label of a multi-label
/// answer contributes one count.
///
/// With `substantive_only`, non-substantive labels are dropped before
/// normalising. The support is the scheme's label list (substantive labels
/// only, or all labels) in scheme order.
pub fn estimate_distribution(
    responses: &[LabeledResponse],
    scheme: &CodingScheme,
    substantive_only: bool,
) -> Result<LabelDistribution, MetricError> {
    if responses.is_empty() {
        return Err(MetricError::EmptyInput("responses"));
    }
    let support = if substantive_only {
        scheme.substantive_labels()
    } else {
        scheme.all_labels()
    };
    let mut counts: HashMap<&str, u64> = support.iter().map(|l| (*l, 0)).collect();
    for r in responses {
        for l in &r.labels {
            if !scheme.contains(l) {
                return Err(MetricError::UnknownLabel(l.clone()));
            }
            if let Some(c) = counts.get_mut(l.as_str()) {
                *c += 1;
            }
        }
    }
    LabelDistribution::from_counts(support.iter().map(|l| (*l, counts[l])))
}

/// Mean number of labels per response.
pub fn avg_labels_per_sample(responses: &[LabeledResponse]) -> Option<f64> {
    if responses.is_empty() {
        return None;
    }
    let total: usize = responses.iter().map(|r| r.labels.len()).sum();
    Some(total as f64 / responses.len() as f64)
}
