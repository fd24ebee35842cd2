//! Survey data model: respondents, waves, the coding scheme, and seeded
//! synthetic populations.

mod answers;
mod demographics;
mod respondent;
mod scheme;
mod synth;
mod wave;

use std::path::{Path, PathBuf};

pub use answers::AnswerBank;
pub use demographics::{
    Age, AgeGroup, EducationDegree, Gender, Party, Region, UnknownToken, Variable,
    VocationalDegree,
};
pub use respondent::{
    load_respondents, read_respondents, save_respondents, write_respondents, Ingested,
    Respondent, RESPONDENT_COLUMNS,
};
pub use scheme::{CodingScheme, COARSE_CLASS_COUNT};
pub use synth::{
    synthesize_population, AnswerOverride, AnswerSpec, Dependency, PopulationSpec,
    SyntheticPopulation,
};
pub use wave::{Wave, WaveTable};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema error: missing column {0:?}")]
    MissingColumn(String),
    #[error("row {row}: unknown {column} token {token:?}")]
    UnknownToken {
        row: usize,
        column: &'static str,
        token: String,
    },
    #[error("duplicate respondent id {id:?} in wave {wave}")]
    DuplicateId { wave: u32, id: String },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("unknown wave {0}")]
    UnknownWave(u32),
    #[error("invalid coding scheme: {0}")]
    InvalidScheme(String),
    #[error("invalid population spec: {0}")]
    InvalidPopulation(String),
    #[error("config: {0}")]
    Config(String),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
