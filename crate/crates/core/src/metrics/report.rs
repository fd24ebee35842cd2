use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Coordinates of one report cell. Empty strings mean "not applicable"
/// (e.g. the survey has no model, population cells have no subgroup).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct CellKey {
    pub wave: Option<u32>,
    pub model: String,
    pub variant: String,
    pub subgroup: String,
}

impl CellKey {
    pub fn new(wave: Option<u32>, model: &str, variant: &str, subgroup: &str) -> Self {
        CellKey { wave, model: model.into(), variant: variant.into(), subgroup: subgroup.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    #[serde(flatten)]
    pub key: CellKey,
    pub metrics: BTreeMap<String, Option<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ReportJson {
    schema_version: u32,
    kind: String,
    cells: Vec<MetricCell>,
}

/// Metric values keyed by cell. Undefined values are kept as `None` and
/// serialize to `null`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub kind: String,
    cells: BTreeMap<CellKey, BTreeMap<String, Option<f64>>>,
}

impl MetricReport {
    pub fn new(kind: impl Into<String>) -> Self {
        MetricReport { kind: kind.into(), cells: BTreeMap::new() }
    }

    /// Stores a value; NaN and infinities become undefined.
    pub fn set(&mut self, key: CellKey, metric: &str, value: Option<f64>) {
        let value = value.filter(|v| v.is_finite());
        self.cells.entry(key).or_default().insert(metric.to_string(), value);
    }

    /// `Some(None)` for a recorded undefined value, `None` if never recorded.
    pub fn get(&self, key: &CellKey, metric: &str) -> Option<Option<f64>> {
        self.cells.get(key).and_then(|m| m.get(metric)).copied()
    }

    pub fn cells(&self) -> impl Iterator<Item = (&CellKey, &BTreeMap<String, Option<f64>>)> {
        self.cells.iter()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// All metric names that occur in any cell.
    pub fn metric_names(&self) -> Vec<String> {
        let mut names: Vec<String> =
            self.cells.values().flat_map(|m| m.keys().cloned()).collect();
        names.sort();
        names.dedup();
        names
    }

    /// Cells whose metric name satisfies `keep`, with other metrics dropped.
    pub fn select(&self, keep: impl Fn(&str) -> bool) -> MetricReport {
        let mut out = MetricReport::new(self.kind.clone());
        for (k, m) in &self.cells {
            for (name, v) in m.iter().filter(|(n, _)| keep(n)) {
                out.set(k.clone(), name, *v);
            }
        }
        out
    }

    /// Later values win on conflicts.
    pub fn merge(&mut self, other: &MetricReport) {
        for (k, m) in &other.cells {
            let dst = self.cells.entry(k.clone()).or_default();
            for (name, v) in m {
                dst.insert(name.clone(), *v);
            }
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ReportJson {
            schema_version: REPORT_SCHEMA_VERSION,
            kind: self.kind.clone(),
            cells: self
                .cells
                .iter()
                .map(|(k, m)| MetricCell { key: k.clone(), metrics: m.clone() })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("report is always serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, MetricError> {
        let doc: ReportJson = serde_json::from_str(s)?;
        let mut out = MetricReport::new(doc.kind);
        for cell in doc.cells {
            for (name, v) in cell.metrics {
                out.set(cell.key.clone(), &name, v);
            }
        }
        Ok(out)
    }
}
