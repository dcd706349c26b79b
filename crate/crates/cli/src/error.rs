use thiserror::Error;

use thinktank_core::aggregation::AggregationError;
use thinktank_core::dataset::DatasetError;
use thinktank_core::evaluation::EvaluationError;
use thinktank_core::experts::ExpertError;
use thinktank_core::router::RouterError;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_BACKEND: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("backend error: {0}")]
    Backend(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Backend(_) => EXIT_BACKEND,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::InvalidSpec(_) | DatasetError::UnknownFormat(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ExpertError> for CliError {
    fn from(e: ExpertError) -> Self {
        match e {
            ExpertError::Config(_) | ExpertError::UnknownExpert(_) => CliError::Config(e.to_string()),
            ExpertError::CandidatePoolTooSmall(_) => CliError::Data(e.to_string()),
            _ => CliError::Backend(e.to_string()),
        }
    }
}

impl From<RouterError> for CliError {
    fn from(e: RouterError) -> Self {
        match e {
            RouterError::AllExpertsFailed { .. } => CliError::Backend(e.to_string()),
            RouterError::EmptySupervision | RouterError::DimensionMismatch { .. } | RouterError::Io(_) => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<AggregationError> for CliError {
    fn from(e: AggregationError) -> Self {
        match e {
            AggregationError::Router(r) => r.into(),
            AggregationError::MissingRouter(_) | AggregationError::UnknownStrategy(_) => {
                CliError::Config(e.to_string())
            }
            AggregationError::EmptyPredictions => CliError::Data(e.to_string()),
            _ => CliError::Backend(e.to_string()),
        }
    }
}

impl From<EvaluationError> for CliError {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::Router(r) => r.into(),
            EvaluationError::Aggregation(a) => a.into(),
            EvaluationError::MissingRouter(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}
