use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("solver error: {0}")]
    Solver(conehj::Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Io { .. } => 3,
        }
    }
}

impl From<conehj::Error> for CliError {
    /// A violated hypothesis means the configured problem is outside the supported class.
    fn from(e: conehj::Error) -> Self {
        match e {
            conehj::Error::Hypothesis(_) => CliError::Config(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}
