//! CLI error handling: usage/config errors exit with 2, runtime failures
//! with 3.

use sica_core::datamodel::DataError;
use sica_core::eval::EvalError;
use sica_core::fastica::IcaError;
use sica_core::isonull::NullError;
use sica_core::mixbase::MixtureError;
use sica_core::simgen::SimError;
use sica_core::whiten::WhitenError;

use crate::io::IoError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

// Validation of inputs and configuration maps to usage errors; failures of
// the machinery itself map to runtime errors.

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::BadConfig { .. }
            | SimError::GridTooSmall { .. }
            | SimError::KurtosisOutOfRange { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<WhitenError> for CliError {
    fn from(e: WhitenError) -> Self {
        match e {
            WhitenError::TooManyComponents { .. }
            | WhitenError::RankDeficient { .. }
            | WhitenError::ZeroComponents => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<IcaError> for CliError {
    fn from(e: IcaError) -> Self {
        match e {
            IcaError::ZeroIterations | IcaError::BadTol => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<NullError> for CliError {
    fn from(e: NullError) -> Self {
        match e {
            NullError::AlphaOutOfRange { .. } | NullError::ZeroDirections => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<MixtureError> for CliError {
    fn from(e: MixtureError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::ComponentCountMismatch { .. }
            | EvalError::VoxelCountMismatch { .. }
            | EvalError::SupportShapeMismatch
            | EvalError::TooFewTimePoints { .. } => CliError::Usage(e.to_string()),
            EvalError::Whiten(w) => w.into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Runtime(e.to_string())
    }
}
