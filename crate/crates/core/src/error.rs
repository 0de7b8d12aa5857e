use thiserror::Error;

use crate::eval::EvalError;
use crate::ingest::IngestError;
use crate::model::ModelError;
use crate::onset::OnsetError;
use crate::severity::SeverityError;
use crate::trend::TrendError;

/// Any failure of the forecasting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    ConfigInvalid { field: String, reason: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Onset(#[from] OnsetError),
    #[error(transparent)]
    Severity(#[from] SeverityError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Trend(#[from] TrendError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failed: {0}")]
    Serialize(String),
}

/// Process exit codes of the command-line tool.
pub mod exit_code {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const NUMERIC: i32 = 4;
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use exit_code::*;
        match self {
            Error::ConfigInvalid { .. } => CONFIG,
            Error::Ingest(_) | Error::Io { .. } | Error::Serialize(_) => DATA,
            Error::Model(e) => match e {
                ModelError::InvalidCoefficients(_)
                | ModelError::TraitFile(_)
                | ModelError::InvalidParameter(_)
                | ModelError::InvalidStep(_) => CONFIG,
                ModelError::NoCasesInTraining | ModelError::Ingest(_) => DATA,
                ModelError::NonFiniteState(_)
                | ModelError::NegativeStateUnrecoverable(_)
                | ModelError::DivergedAssimilation(_) => NUMERIC,
            },
            Error::Onset(e) => match e {
                OnsetError::InvalidAlpha(_) => CONFIG,
                OnsetError::DegenerateSamples => NUMERIC,
                _ => DATA,
            },
            Error::Severity(e) => match e {
                SeverityError::DegenerateSamples => NUMERIC,
                _ => DATA,
            },
            Error::Trend(_) => DATA,
            Error::Eval(e) => match e {
                EvalError::InvalidBins | EvalError::TargetNotAfterTraining { .. } => CONFIG,
                _ => DATA,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
