use std::io::Read;
use std::path::Path;

use crate::corpus::CodingScheme;

use super::{LabeledResponse, LabelingError, Source};

/// A manually coded answer.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub text: String,
    pub response: LabeledResponse,
}

pub fn load_annotations(path: impl AsRef<Path>, scheme: &CodingScheme) -> Result<Vec<Annotation>, LabelingError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| LabelingError::Io { path: path.to_path_buf(), source: e })?;
    read_annotations(file, scheme)
}

/// Reads `text,labels[,id][,source]` rows. Labels are ';'-separated coarse
/// labels, or fine labels which are coarsened. Rows without an id get
/// `row<N>`; the source defaults to `llm`.
pub fn read_annotations<R: Read>(reader: R, scheme: &CodingScheme) -> Result<Vec<Annotation>, LabelingError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let text_col = col("text").ok_or_else(|| LabelingError::MissingColumn("text".into()))?;
    let labels_col = col("labels").ok_or_else(|| LabelingError::MissingColumn("labels".into()))?;
    let id_col = col("id");
    let source_col = col("source");

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let mut labels: Vec<String> = Vec::new();
        for token in rec[labels_col].split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let label = if scheme.contains(token) {
                token
            } else {
                scheme.coarsen(token).map_err(|_| LabelingError::RowLabel {
                    row,
                    token: token.to_string(),
                })?
            };
            if !labels.iter().any(|l| l == label) {
                labels.push(label.to_string());
            }
        }
        if labels.is_empty() {
            return Err(LabelingError::RowLabel { row, token: String::new() });
        }
        let id = id_col.map(|c| rec[c].trim().to_string()).filter(|s| !s.is_empty());
        let source = match source_col.map(|c| rec[c].trim()) {
            None | Some("") | Some("llm") => Source::Llm,
            Some("survey") => Source::Survey,
            Some(other) => {
                return Err(LabelingError::RowSource { row, token: other.to_string() })
            }
        };
        out.push(Annotation {
            text: rec[text_col].to_string(),
            response: LabeledResponse::new(id.unwrap_or_else(|| format!("row{row}")), source, labels),
        });
    }
    Ok(out)
}
