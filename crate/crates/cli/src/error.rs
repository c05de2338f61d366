use std::path::PathBuf;

use lbcbeam::beams::BeamError;
use lbcbeam::codes::CodeError;
use lbcbeam::config::ConfigError;
use lbcbeam::discovery::DiscoveryError;
use lbcbeam::eval::EvalError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    InvalidConfig(#[from] ConfigError),
    #[error("infeasible code: {0}")]
    Infeasible(String),
    #[error("capacity: {0}")]
    Capacity(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::InvalidConfig(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Io { .. } | CliError::Other(_) => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<CodeError> for CliError {
    fn from(e: CodeError) -> Self {
        match e {
            CodeError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            CodeError::InvalidLength(_) | CodeError::InvalidDistance => {
                CliError::Config(e.to_string())
            }
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<BeamError> for CliError {
    fn from(e: BeamError) -> Self {
        match e {
            BeamError::Code { .. } => CliError::Infeasible(e.to_string()),
            BeamError::ZeroClusters => CliError::Config(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<DiscoveryError> for CliError {
    fn from(e: DiscoveryError) -> Self {
        match e {
            DiscoveryError::Capacity { .. } => CliError::Capacity(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Config(c) => CliError::InvalidConfig(c),
            EvalError::Beam(b) => b.into(),
            EvalError::Discovery(d) => d.into(),
            other => CliError::Other(other.to_string()),
        }
    }
}
