use serde::Serialize;

use crate::corpus::CodingScheme;
use crate::labeling::LabeledResponse;
use crate::metrics::{estimate_distribution, js_distance_in, LabelDistribution, LogBase};

use super::ExperimentError;

/// Lower-triangular JS distances between waves: `js[i][j]` (j < i) compares
/// wave `waves[j]` with the later wave `waves[i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftMatrix {
    pub waves: Vec<u32>,
    pub js: Vec<Vec<Option<f64>>>,
}

impl DriftMatrix {
    pub fn get(&self, later: u32, earlier: u32) -> Option<f64> {
        let i = self.waves.iter().position(|&w| w == later)?;
        let j = self.waves.iter().position(|&w| w == earlier)?;
        self.js.get(i)?.get(j).copied().flatten()
    }
}

/// Waves without a distribution yield undefined rows and columns.
pub fn survey_drift(
    dists: &[(u32, Option<LabelDistribution>)],
    base: LogBase,
) -> Result<DriftMatrix, ExperimentError> {
    if dists.len() < 2 {
        return Err(ExperimentError::Config("survey drift needs at least two waves".into()));
    }
    let js = dists
        .iter()
        .enumerate()
        .map(|(i, (_, later))| {
            dists[..i]
                .iter()
                .map(|(_, earlier)| match (earlier, later) {
                    (Some(p), Some(q)) => Some(js_distance_in(p, q, base)),
                    _ => None,
                })
                .collect()
        })
        .collect();
    Ok(DriftMatrix { waves: dists.iter().map(|(w, _)| *w).collect(), js })
}

/// Drift over coded survey answers, on substantive labels.
pub fn survey_drift_from_labels(
    waves: &[u32],
    answers: &[(u32, LabeledResponse)],
    scheme: &CodingScheme,
    base: LogBase,
) -> Result<DriftMatrix, ExperimentError> {
    let dists = waves
        .iter()
        .map(|&w| {
            let wave: Vec<LabeledResponse> =
                answers.iter().filter(|(aw, _)| *aw == w).map(|(_, l)| l.clone()).collect();
            (w, estimate_distribution(&wave, scheme, true).ok())
        })
        .collect::<Vec<_>>();
    survey_drift(&dists, base)
}
