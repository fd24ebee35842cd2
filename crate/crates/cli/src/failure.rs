use fidelity_core::corpus::CorpusError;
use fidelity_core::experiments::ExperimentError;
use fidelity_core::genclient::GenClientError;
use fidelity_core::labeling::LabelingError;
use fidelity_core::report::ReportError;

/// A command failure and its exit code class.
#[derive(Debug)]
pub enum Failure {
    /// Bad inputs or configuration, exit code 2.
    Validation(anyhow::Error),
    /// The run itself failed, exit code 1.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Validation(e) | Failure::Runtime(e) => e,
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;

pub trait Classify<T> {
    fn validation(self) -> Outcome<T>;
    fn runtime(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn validation(self) -> Outcome<T> {
        self.map_err(|e| Failure::Validation(e.into()))
    }

    fn runtime(self) -> Outcome<T> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.into())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        // an unreadable input file is a bad argument too
        Failure::Validation(e.into())
    }
}

impl From<GenClientError> for Failure {
    fn from(e: GenClientError) -> Self {
        match e {
            GenClientError::Config(_)
            | GenClientError::EmptyBatch
            | GenClientError::SchemaVersion { .. }
            | GenClientError::Record { .. } => Failure::Validation(e.into()),
            _ => Failure::Runtime(e.into()),
        }
    }
}

impl From<LabelingError> for Failure {
    fn from(e: LabelingError) -> Self {
        match e {
            LabelingError::Config(_)
            | LabelingError::Lexicon(_)
            | LabelingError::RowLabel { .. }
            | LabelingError::MissingColumn(_) => Failure::Validation(e.into()),
            _ => Failure::Runtime(e.into()),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Io { .. } => Failure::Runtime(e.into()),
            _ => Failure::Validation(e.into()),
        }
    }
}
