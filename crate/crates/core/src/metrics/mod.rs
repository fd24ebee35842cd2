//! Distribution, information-theoretic, association and agreement metrics.

mod agreement;
mod association;
mod distribution;
mod divergence;
mod information;
mod report;

pub use agreement::{ape, cohens_kappa, mean_defined, pearson_r, proportion_agreement};
pub use association::{chi_square, cramers_v};
pub use distribution::{align, avg_labels_per_sample, estimate_distribution, LabelDistribution};
pub use divergence::{js_distance, js_distance_in, js_divergence_in, kl_divergence, kl_divergence_in};
pub use information::{
    conditional_entropy, conditional_entropy_in, entropy, entropy_in, information_gain, JointTable,
};
pub use report::{CellKey, MetricCell, MetricReport, REPORT_SCHEMA_VERSION};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("distribution has an empty support")]
    EmptySupport,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("label {0:?} is not in the coding scheme")]
    UnknownLabel(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("q is zero where p is positive (label {0:?}); pass a smoothing constant")]
    NotAbsolutelyContinuous(String),
    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("undefined: {0}")]
    Undefined(&'static str),
    #[error("malformed metric report: {0}")]
    Report(#[from] serde_json::Error),
}

/// Logarithm base for entropies and divergences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum LogBase {
    /// bits
    #[default]
    #[serde(rename = "2")]
    Two,
    /// nats
    #[serde(rename = "e")]
    Natural,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::Natural => x.ln(),
        }
    }

    /// Upper bound of the JS distance, reached for disjoint supports.
    pub fn js_distance_max(self) -> f64 {
        match self {
            LogBase::Two => 1.0,
            LogBase::Natural => std::f64::consts::LN_2.sqrt(),
        }
    }
}
