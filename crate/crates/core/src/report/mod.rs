//! Table and SVG figure emission from metric reports.

mod plots;
mod svg;
mod tables;

use std::path::{Path, PathBuf};

pub use plots::{emit_plots, FigureKind};
pub use tables::{emit_tables, render_tables, Cell, Table, TableFormat};

use crate::metrics::MetricReport;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("report has no {0} metrics")]
    MissingMetrics(&'static str),
    #[error("unknown figure {0:?} (expected one of label-frequency, info-gain, js-subgroups, entropy-js, cramer, ablation)")]
    UnknownFigure(String),
    #[error("unknown table format {0:?} (expected csv, json or markdown)")]
    UnknownFormat(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn write_all(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(|e| ReportError::Io { path: dir.to_path_buf(), source: e })?;
    files
        .iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| ReportError::Io { path: path.clone(), source: e })?;
            Ok(path)
        })
        .collect()
}

pub fn write_tables(report: &MetricReport, format: TableFormat, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    write_all(dir, &render_tables(report, format))
}

pub fn write_plots(report: &MetricReport, kind: FigureKind, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    write_all(dir, &emit_plots(report, kind)?)
}
