use std::process::ExitCode;

use thiserror::Error;
use trollkit::corpus::CorpusError;
use trollkit::eval::EvalError;
use trollkit::forest::ForestError;
use trollkit::lda::LdaError;
use trollkit::svm::SvmError;
use trollkit::textprep::TextError;

/// Exit code 2 for anything the caller can fix (flags, config, input data),
/// 1 for everything else.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("VocabMismatch: {0}")]
    VocabMismatch(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Internal(_) => ExitCode::from(1),
            _ => ExitCode::from(2),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

/// Module errors are input errors except for I/O failures, which are
/// internal.
macro_rules! module_error {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                let name = format!("{e:?}");
                let variant = name.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("").to_string();
                if variant == "Io" {
                    CliError::Internal(e.to_string())
                } else {
                    CliError::Input(format!("{variant}: {e}"))
                }
            }
        }
    )*};
}

module_error!(CorpusError, TextError, EvalError, SvmError, ForestError, LdaError);
