use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::metrics::{CellKey, MetricReport};

use super::ReportError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableFormat {
    Csv,
    Json,
    Markdown,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
            TableFormat::Markdown => "md",
        }
    }
}

impl std::str::FromStr for TableFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    /// Value and the number of decimals shown in text views.
    Num(Option<f64>, usize),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(None, _) => "nan".into(),
            Cell::Num(Some(v), d) => format!("{v:.d$}", d = *d),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => json!(s),
            Cell::Num(None, _) => Value::Null,
            Cell::Num(Some(v), d) => {
                let rounded: f64 = format!("{v:.d$}", d = *d).parse().unwrap_or(*v);
                json!(rounded)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn render(&self, format: TableFormat) -> String {
        match format {
            TableFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns).expect("in-memory write");
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text)).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
            }
            TableFormat::Json => {
                let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
                let doc = json!({"table": self.name, "columns": self.columns, "rows": rows});
                serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
            }
            TableFormat::Markdown => {
                let esc = |s: String| s.replace('|', "\\|");
                let mut out = format!("| {} |\n", self.columns.iter().cloned().map(esc).collect::<Vec<_>>().join(" | "));
                out.push_str(&format!("|{}\n", "---|".repeat(self.columns.len())));
                for row in &self.rows {
                    out.push_str(&format!("| {} |\n", row.iter().map(|c| esc(c.text())).collect::<Vec<_>>().join(" | ")));
                }
                out
            }
        }
    }
}

fn decimals(metric: &str) -> usize {
    if metric == "n" || metric == "retries" || metric == "failures" {
        0
    } else if metric.starts_with("pct_") || metric.starts_with("ape:") || metric.starts_with("mean_ape:") {
        1
    } else {
        3
    }
}

fn axis_cells(k: &CellKey) -> Vec<Cell> {
    vec![
        Cell::Text(k.wave.map(|w| w.to_string()).unwrap_or_default()),
        Cell::Text(k.model.clone()),
        Cell::Text(k.variant.clone()),
        Cell::Text(k.subgroup.clone()),
    ]
}

const AXES: [&str; 4] = ["wave", "model", "variant", "subgroup"];

/// Wide table of scalar metrics (names without a `:` qualifier), one row per
/// cell, metric columns alphabetical.
fn cells_table(report: &MetricReport) -> Table {
    let metrics: Vec<String> = report.metric_names().into_iter().filter(|m| !m.contains(':')).collect();
    let mut columns: Vec<String> = AXES.iter().map(|s| s.to_string()).collect();
    columns.extend(metrics.iter().cloned());
    let rows = report
        .cells()
        .filter(|(_, m)| metrics.iter().any(|n| m.contains_key(n)))
        .map(|(k, m)| {
            let mut row = axis_cells(k);
            row.extend(metrics.iter().map(|n| Cell::Num(m.get(n).copied().flatten(), decimals(n))));
            row
        })
        .collect();
    Table { name: "cells".into(), columns, rows }
}

/// Population entropies and JS distance with waves as columns, one block
/// per (model, variant).
fn population_table(report: &MetricReport) -> Table {
    const ROWS: [&str; 3] = ["entropy_llm", "entropy_survey", "js_distance"];
    let pop: Vec<(&CellKey, _)> = report
        .cells()
        .filter(|(k, m)| k.subgroup.is_empty() && k.wave.is_some() && ROWS.iter().any(|r| m.contains_key(*r)))
        .collect();
    let waves: BTreeSet<u32> = pop.iter().filter_map(|(k, _)| k.wave).collect();
    let groups: BTreeSet<(String, String)> = pop.iter().map(|(k, _)| (k.model.clone(), k.variant.clone())).collect();
    let mut columns = vec!["model".to_string(), "variant".into(), "metric".into()];
    columns.extend(waves.iter().map(|w| w.to_string()));
    let mut rows = Vec::new();
    for (model, variant) in &groups {
        for metric in ROWS {
            let mut row = vec![Cell::Text(model.clone()), Cell::Text(variant.clone()), Cell::Text(metric.into())];
            for &w in &waves {
                let v = report.get(&CellKey::new(Some(w), model, variant, ""), metric).flatten();
                row.push(Cell::Num(v, 3));
            }
            rows.push(row);
        }
    }
    Table { name: "population".into(), columns, rows }
}

/// Label percentages per wave: survey columns, one column per model and
/// variant, and mean APE columns.
fn labels_table(report: &MetricReport) -> Table {
    let mut labels: BTreeSet<String> = BTreeSet::new();
    let mut survey_cols: BTreeMap<u32, CellKey> = BTreeMap::new();
    let mut llm_cols: BTreeSet<CellKey> = BTreeSet::new();
    let mut ape_cols: BTreeSet<CellKey> = BTreeSet::new();
    for (k, m) in report.cells() {
        if !k.subgroup.is_empty() {
            continue;
        }
        for name in m.keys() {
            if let Some(l) = name.strip_prefix("pct_survey:") {
                labels.insert(l.to_string());
                if let Some(w) = k.wave {
                    survey_cols.entry(w).or_insert_with(|| k.clone());
                }
            } else if let Some(l) = name.strip_prefix("pct_llm:") {
                labels.insert(l.to_string());
                llm_cols.insert(k.clone());
            } else if name.starts_with("mean_ape:") {
                ape_cols.insert(k.clone());
            }
        }
    }
    let label_of = |k: &CellKey| {
        [k.wave.map(|w| w.to_string()).unwrap_or_else(|| "all".into()), k.model.clone(), k.variant.clone()]
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut columns = vec!["label".to_string()];
    columns.extend(survey_cols.keys().map(|w| format!("survey {w}")));
    columns.extend(llm_cols.iter().map(label_of));
    columns.extend(ape_cols.iter().map(|k| format!("mean_ape {}", label_of(k))));
    let rows = labels
        .iter()
        .map(|l| {
            let mut row = vec![Cell::Text(l.clone())];
            row.extend(survey_cols.values().map(|k| Cell::Num(report.get(k, &format!("pct_survey:{l}")).flatten(), 1)));
            row.extend(llm_cols.iter().map(|k| Cell::Num(report.get(k, &format!("pct_llm:{l}")).flatten(), 1)));
            row.extend(ape_cols.iter().map(|k| Cell::Num(report.get(k, &format!("mean_ape:{l}")).flatten(), 1)));
            row
        })
        .collect();
    Table { name: "labels".into(), columns, rows }
}

/// Pairwise Cramér's V among the six variables and the answer, long format.
fn cramer_table(report: &MetricReport) -> Table {
    let mut columns: Vec<String> = AXES[..3].iter().map(|s| s.to_string()).collect();
    columns.extend(["source", "a", "b", "cramers_v"].map(String::from));
    let mut rows = Vec::new();
    for (k, m) in report.cells() {
        for (name, v) in m {
            let parsed = if let Some(rest) = name.strip_prefix("cramers_v:") {
                rest.split_once('~').map(|(a, b)| ("demographic", a.to_string(), b.to_string()))
            } else if let Some(var) = name.strip_prefix("cramers_v_survey:") {
                Some(("survey", var.to_string(), "answer".to_string()))
            } else {
                name.strip_prefix("cramers_v_llm:").map(|var| ("llm", var.to_string(), "answer".to_string()))
            };
            if let Some((src, a, b)) = parsed {
                let mut row = axis_cells(k);
                row.truncate(3);
                row.extend([Cell::Text(src.into()), Cell::Text(a), Cell::Text(b), Cell::Num(*v, 3)]);
                rows.push(row);
            }
        }
    }
    Table { name: "cramer".into(), columns, rows }
}

/// Every table view of a report. Views with no matching metrics are
/// header-only.
pub fn emit_tables(report: &MetricReport) -> Vec<Table> {
    vec![cells_table(report), population_table(report), labels_table(report), cramer_table(report)]
}

/// Files `(name.ext, contents)` for every table in `format`.
pub fn render_tables(report: &MetricReport, format: TableFormat) -> Vec<(String, String)> {
    emit_tables(report)
        .into_iter()
        .map(|t| (format!("{}.{}", t.name, format.extension()), t.render(format)))
        .collect()
}
